#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <vector>

#include "unim/common.hpp"
#include "unim/image.hpp"

using namespace unim;
using namespace unim::image;

namespace {

double unit(SplitMix64& rng) {
    return (rng.next() >> 11) * (1.0 / 9007199254740992.0);
}

double gauss(SplitMix64& rng) {
    double u1 = unit(rng), u2 = unit(rng);
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
}

double laplace(SplitMix64& rng) {
    double u = unit(rng) - 0.5;
    double s = u < 0 ? -1.0 : 1.0;
    return -s * std::log(1.0 - 2.0 * std::abs(u) + 1e-300);
}

Image random_image(int rows, int cols, uint64_t seed) {
    SplitMix64 rng(seed);
    Image img(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            img(r, c) = 128.0 + 40.0 * gauss(rng);
    return img.cwiseMax(0.0).cwiseMin(255.0);
}

const char* kModelPath = "data/niqe/niqe_model_v1.txt";

}  // namespace

TEST_CASE("mscn coefficients are normalized") {
    auto field = compute_mscn(random_image(160, 160, 3));
    REQUIRE(field.mscn.rows() == 160);
    REQUIRE(field.mscn.cols() == 160);
    double mean = field.mscn.mean();
    CHECK(std::abs(mean) < 0.05);
    // Normalization bounds the coefficients to a few deviations.
    CHECK(field.mscn.cwiseAbs().maxCoeff() < 8.0);
    CHECK(field.sigma.minCoeff() >= 0.0);

    // A constant image normalizes to all zeros (sigma + 1 denominators).
    Image flat = Image::Constant(64, 64, 77.0);
    auto flat_field = compute_mscn(flat);
    CHECK(flat_field.mscn.cwiseAbs().maxCoeff() ==
          doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("ggd fit recovers known shapes") {
    SplitMix64 rng(42);
    std::vector<double> gaussian, laplacian;
    for (int i = 0; i < 60000; ++i) {
        gaussian.push_back(1.5 * gauss(rng));
        laplacian.push_back(0.8 * laplace(rng));
    }
    auto g = fit_ggd(gaussian);
    CHECK(std::abs(g.alpha - 2.0) < 0.15);
    CHECK(std::abs(g.sigma2 - 2.25) < 0.12);
    auto l = fit_ggd(laplacian);
    CHECK(std::abs(l.alpha - 1.0) < 0.12);
}

TEST_CASE("aggd fit detects asymmetry") {
    SplitMix64 rng(43);
    std::vector<double> symmetric, skewed;
    for (int i = 0; i < 60000; ++i) {
        double v = gauss(rng);
        symmetric.push_back(v);
        skewed.push_back(v < 0 ? 0.5 * v : v);
    }
    auto s = fit_aggd(symmetric);
    CHECK(std::abs(s.alpha - 2.0) < 0.2);
    CHECK(std::abs(s.sigma_l2 - s.sigma_r2) < 0.1);
    CHECK(std::abs(s.mean) < 0.05);
    auto k = fit_aggd(skewed);
    CHECK(k.sigma_l2 < k.sigma_r2);
    CHECK(k.mean > 0.0 - 0.05);
}

TEST_CASE("patch features have the documented shape") {
    auto feats = mscn_features(random_image(224, 224, 9), 96);
    CHECK(feats.features.size() == 4);  // 2x2 grid of 96px patches
    for (const auto& f : feats.features) CHECK(f.size() == kFeatureDim);

    // Fewer than two patches per side is rejected.
    CHECK_THROWS_AS(mscn_features(random_image(120, 224, 9), 96), IngestError);
    CHECK_THROWS_AS(mscn_features(random_image(224, 191, 9), 96), IngestError);

    // Sharpness filtering drops flat patches during fitting.
    Image half = random_image(224, 224, 10);
    half.block(0, 0, 224, 112).setConstant(128.0);
    auto filtered = mscn_features(half, 96, 0.75);
    CHECK(filtered.rejected > 0);
    CHECK(filtered.features.size() + filtered.rejected == 4);
}

TEST_CASE("hand-computed mahalanobis cases") {
    NiqeModel model;
    model.mu = Eigen::Vector2d(0.0, 0.0);
    model.cov = Eigen::Matrix2d::Identity();

    // Pooled covariance (I + I) / 2 = I, so the distance is plain euclidean.
    CHECK(niqe_distance(Eigen::Vector2d(1.0, 0.0), Eigen::Matrix2d::Identity(),
                        model) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(niqe_distance(Eigen::Vector2d(3.0, 4.0), Eigen::Matrix2d::Identity(),
                        model) == doctest::Approx(5.0).epsilon(1e-9));
    // Identical statistics: zero distance.
    CHECK(niqe_distance(model.mu, model.cov, model) ==
          doctest::Approx(0.0).epsilon(1e-12));

    // Singular pooled covariance falls back to the pseudo-inverse: the
    // component in the null space is ignored instead of blowing up.
    Eigen::Matrix2d rank1 = Eigen::Matrix2d::Zero();
    rank1(0, 0) = 1.0;
    NiqeModel singular;
    singular.mu = Eigen::Vector2d(0.0, 0.0);
    singular.cov = rank1;
    CHECK(niqe_distance(Eigen::Vector2d(1.0, 0.0), rank1, singular) ==
          doctest::Approx(1.0).epsilon(1e-9));
    CHECK(niqe_distance(Eigen::Vector2d(0.0, 1.0), rank1, singular) ==
          doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("distance is symmetric in the two distributions") {
    SplitMix64 rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd mu_a(3), mu_b(3);
        Eigen::MatrixXd a(3, 3), b(3, 3);
        for (int i = 0; i < 3; ++i) {
            mu_a(i) = unit(rng);
            mu_b(i) = unit(rng);
            for (int j = 0; j < 3; ++j) {
                a(i, j) = unit(rng) - 0.5;
                b(i, j) = unit(rng) - 0.5;
            }
        }
        a = (a * a.transpose()).eval();  // symmetric PSD
        b = (b * b.transpose()).eval();
        NiqeModel ma, mb;
        ma.mu = mu_a;
        ma.cov = a;
        mb.mu = mu_b;
        mb.cov = b;
        double forward = niqe_distance(mu_b, b, ma);
        double backward = niqe_distance(mu_a, a, mb);
        CHECK(std::abs(forward - backward) < 1e-12);
    }
}

TEST_CASE("model io round trip") {
    namespace fs = std::filesystem;
    std::vector<Image> corpus;
    for (uint64_t s = 1; s <= 4; ++s) corpus.push_back(random_image(224, 224, s));
    auto model = fit_niqe_model(corpus, 96, 25.0, 0.0);
    CHECK(model.mu.size() == kFeatureDim);
    CHECK(model.cov.rows() == kFeatureDim);

    auto dir = fs::temp_directory_path() / "unim_image_test";
    fs::create_directories(dir);
    std::string path = (dir / "model.txt").string();
    save_niqe_model(path, model);
    auto back = load_niqe_model(path);
    CHECK(back.version == model.version);
    CHECK(back.patch_size == model.patch_size);
    CHECK(back.d0 == model.d0);
    CHECK((back.mu - model.mu).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((back.cov - model.cov).cwiseAbs().maxCoeff() < 1e-12);

    CHECK_THROWS_AS(load_niqe_model((dir / "absent.txt").string()), IngestError);
    fs::remove_all(dir);
}

TEST_CASE("committed model scores the held-out photo above its corruption") {
    auto model = load_niqe_model(kModelPath);
    CHECK(model.patch_size == 96);
    CHECK(model.mu.size() == kFeatureDim);

    auto clean = image_quality_file("tests/fixtures/images/photo.png", model);
    auto noisy = image_quality_file("tests/fixtures/images/photo_noisy.png",
                                    model);
    CHECK(clean.patches > 0);
    CHECK(clean.score > noisy.score);
    CHECK(clean.distance < noisy.distance);
    CHECK(clean.score == doctest::Approx(std::exp(-clean.distance / model.d0)));

    // Determinism.
    auto again = image_quality_file("tests/fixtures/images/photo.png", model);
    CHECK(again.distance == clean.distance);
}

TEST_CASE("downsampling halves each dimension") {
    auto img = random_image(101, 64, 12);
    auto half = downsample2(img);
    CHECK(half.rows() == 50);
    CHECK(half.cols() == 32);
    // Box average of a constant stays put.
    Image flat = Image::Constant(32, 32, 9.0);
    CHECK(downsample2(flat).mean() == doctest::Approx(9.0));
}
