#include "unim/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <opencv2/imgcodecs.hpp>

#include "unim/common.hpp"

namespace unim::image {

namespace {

constexpr double kEps = 1e-10;

// Lanczos-free, dependency-light Gaussian window, 7x7 with sigma 7/6,
// normalized to unit sum.
const Eigen::MatrixXd& gaussian_window() {
    static const Eigen::MatrixXd w = [] {
        Eigen::MatrixXd m(7, 7);
        double sigma = 7.0 / 6.0;
        double sum = 0.0;
        for (int i = 0; i < 7; ++i) {
            for (int j = 0; j < 7; ++j) {
                double di = i - 3, dj = j - 3;
                m(i, j) = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
                sum += m(i, j);
            }
        }
        m /= sum;
        return m;
    }();
    return w;
}

// 2D correlation with symmetric (reflect) padding.
Image filter_symmetric(const Image& img, const Eigen::MatrixXd& kernel) {
    int kh = static_cast<int>(kernel.rows()), kw = static_cast<int>(kernel.cols());
    int oh = kh / 2, ow = kw / 2;
    int h = static_cast<int>(img.rows()), w = static_cast<int>(img.cols());
    Image out(h, w);
    auto reflect = [](int v, int n) {
        while (v < 0 || v >= n) {
            if (v < 0) v = -v - 1;
            if (v >= n) v = 2 * n - v - 1;
        }
        return v;
    };
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            double acc = 0.0;
            for (int i = 0; i < kh; ++i) {
                int rr = reflect(r + i - oh, h);
                for (int j = 0; j < kw; ++j) {
                    int cc = reflect(c + j - ow, w);
                    acc += kernel(i, j) * img(rr, cc);
                }
            }
            out(r, c) = acc;
        }
    }
    return out;
}

// rho(alpha) = Gamma(2/a)^2 / (Gamma(1/a) Gamma(3/a)), precomputed over the
// moment-matching grid.
struct AlphaGrid {
    std::vector<double> alpha;
    std::vector<double> rho;
};

const AlphaGrid& alpha_grid() {
    static const AlphaGrid grid = [] {
        AlphaGrid g;
        for (double a = 0.2; a <= 10.0 + 1e-9; a += 0.001) {
            double lg1 = std::lgamma(1.0 / a);
            double lg2 = std::lgamma(2.0 / a);
            double lg3 = std::lgamma(3.0 / a);
            g.alpha.push_back(a);
            g.rho.push_back(std::exp(2.0 * lg2 - lg1 - lg3));
        }
        return g;
    }();
    return grid;
}

double invert_rho(double target) {
    const AlphaGrid& g = alpha_grid();
    size_t best = 0;
    double best_err = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < g.alpha.size(); ++i) {
        double err = std::fabs(g.rho[i] - target);
        if (err < best_err) {
            best_err = err;
            best = i;
        }
    }
    return g.alpha[best];
}

}  // namespace

Image load_image_gray(const std::string& path) {
    cv::Mat m = cv::imread(path, cv::IMREAD_GRAYSCALE);
    if (m.empty()) throw IngestError("cannot decode image: " + path);
    Image img(m.rows, m.cols);
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c)
            img(r, c) = static_cast<double>(m.at<uint8_t>(r, c));
    return img;
}

void save_image_gray(const std::string& path, const Image& img) {
    cv::Mat m(static_cast<int>(img.rows()), static_cast<int>(img.cols()), CV_8U);
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c)
            m.at<uint8_t>(r, c) = static_cast<uint8_t>(
                std::clamp(std::lround(img(r, c)), 0L, 255L));
    if (!cv::imwrite(path, m)) throw IngestError("cannot write image: " + path);
}

Image downsample2(const Image& img) {
    int h = static_cast<int>(img.rows()) / 2;
    int w = static_cast<int>(img.cols()) / 2;
    Image out(h, w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c)
            out(r, c) = 0.25 * (img(2 * r, 2 * c) + img(2 * r + 1, 2 * c) +
                                img(2 * r, 2 * c + 1) + img(2 * r + 1, 2 * c + 1));
    return out;
}

MscnField compute_mscn(const Image& img) {
    const Eigen::MatrixXd& w = gaussian_window();
    Image mu = filter_symmetric(img, w);
    Image mu2 = mu.cwiseProduct(mu);
    Image raw2 = filter_symmetric(img.cwiseProduct(img), w);
    MscnField out;
    out.sigma = (raw2 - mu2).cwiseMax(0.0).cwiseSqrt();
    out.mscn = ((img - mu).array() / (out.sigma.array() + 1.0)).matrix();
    return out;
}

GgdFit fit_ggd(const std::vector<double>& values) {
    GgdFit fit;
    if (values.empty()) return fit;
    double m2 = 0.0, m1 = 0.0;
    for (double v : values) {
        m2 += v * v;
        m1 += std::fabs(v);
    }
    m2 /= values.size();
    m1 /= values.size();
    fit.sigma2 = m2;
    if (m2 < kEps || m1 < kEps) {
        fit.alpha = 2.0;
        return fit;
    }
    double rho = (m1 * m1) / m2;
    fit.alpha = invert_rho(rho);
    return fit;
}

AggdFit fit_aggd(const std::vector<double>& values) {
    AggdFit fit;
    if (values.empty()) return fit;
    double left_sq = 0.0, right_sq = 0.0, abs_sum = 0.0, sq_sum = 0.0;
    size_t left_n = 0, right_n = 0;
    for (double v : values) {
        abs_sum += std::fabs(v);
        sq_sum += v * v;
        if (v < 0) {
            left_sq += v * v;
            ++left_n;
        } else if (v > 0) {
            right_sq += v * v;
            ++right_n;
        }
    }
    double sigma_l = left_n ? std::sqrt(left_sq / left_n) : 0.0;
    double sigma_r = right_n ? std::sqrt(right_sq / right_n) : 0.0;
    fit.sigma_l2 = sigma_l * sigma_l;
    fit.sigma_r2 = sigma_r * sigma_r;
    if (sq_sum < kEps || abs_sum < kEps) return fit;
    double gamma_hat = sigma_r > kEps ? sigma_l / sigma_r : 1.0;
    double r_hat = (abs_sum / values.size()) * (abs_sum / values.size()) /
                   (sq_sum / values.size());
    double R_hat = r_hat * (gamma_hat * gamma_hat * gamma_hat + 1.0) *
                   (gamma_hat + 1.0) /
                   ((gamma_hat * gamma_hat + 1.0) * (gamma_hat * gamma_hat + 1.0));
    fit.alpha = invert_rho(R_hat);
    double lg1 = std::lgamma(1.0 / fit.alpha);
    double lg2 = std::lgamma(2.0 / fit.alpha);
    double lg3 = std::lgamma(3.0 / fit.alpha);
    fit.mean = (sigma_r - sigma_l) * std::exp(lg2 - lg1) *
               std::exp(0.5 * (lg1 - lg3));
    return fit;
}

namespace {

// 18 features from one MSCN patch: GGD of the coefficients, then AGGD of the
// four pairwise-product orientations (horizontal, vertical, both diagonals).
void patch_features_18(const Image& mscn, std::vector<double>& out) {
    std::vector<double> flat;
    flat.reserve(mscn.size());
    for (int r = 0; r < mscn.rows(); ++r)
        for (int c = 0; c < mscn.cols(); ++c) flat.push_back(mscn(r, c));
    GgdFit ggd = fit_ggd(flat);
    out.push_back(ggd.alpha);
    out.push_back(ggd.sigma2);

    const int dr[4] = {0, 1, 1, 1};
    const int dc[4] = {1, 0, 1, -1};
    for (int o = 0; o < 4; ++o) {
        std::vector<double> products;
        products.reserve(mscn.size());
        for (int r = 0; r < mscn.rows(); ++r) {
            for (int c = 0; c < mscn.cols(); ++c) {
                int rr = r + dr[o], cc = c + dc[o];
                if (rr < 0 || rr >= mscn.rows() || cc < 0 || cc >= mscn.cols())
                    continue;
                products.push_back(mscn(r, c) * mscn(rr, cc));
            }
        }
        AggdFit aggd = fit_aggd(products);
        out.push_back(aggd.alpha);
        out.push_back(aggd.mean);
        out.push_back(aggd.sigma_l2);
        out.push_back(aggd.sigma_r2);
    }
}

}  // namespace

PatchFeatures mscn_features(const Image& img, int patch_size,
                            double min_sharpness) {
    if (img.rows() < 2 * patch_size || img.cols() < 2 * patch_size)
        throw IngestError("image too small: need at least " +
                          std::to_string(2 * patch_size) + " px per side");
    MscnField scale1 = compute_mscn(img);
    Image half = downsample2(img);
    MscnField scale2 = compute_mscn(half);

    int rows = static_cast<int>(img.rows()) / patch_size;
    int cols = static_cast<int>(img.cols()) / patch_size;
    int p2 = patch_size / 2;

    // Patch sharpness drives both degenerate rejection and (for fitting)
    // relative selection.
    Eigen::MatrixXd sharpness(rows, cols);
    double max_sharp = 0.0;
    for (int pr = 0; pr < rows; ++pr) {
        for (int pc = 0; pc < cols; ++pc) {
            sharpness(pr, pc) =
                scale1.sigma.block(pr * patch_size, pc * patch_size, patch_size,
                                   patch_size)
                    .mean();
            max_sharp = std::max(max_sharp, sharpness(pr, pc));
        }
    }

    PatchFeatures out;
    for (int pr = 0; pr < rows; ++pr) {
        for (int pc = 0; pc < cols; ++pc) {
            if (sharpness(pr, pc) < 1e-3) {
                ++out.rejected;  // flat patch, variance features degenerate
                continue;
            }
            if (min_sharpness > 0.0 &&
                sharpness(pr, pc) < min_sharpness * max_sharp) {
                ++out.rejected;
                continue;
            }
            std::vector<double> feats;
            feats.reserve(kFeatureDim);
            Image patch1 =
                scale1.mscn.block(pr * patch_size, pc * patch_size, patch_size,
                                  patch_size);
            patch_features_18(patch1, feats);
            int r2 = std::min<int>(pr * p2, static_cast<int>(scale2.mscn.rows()) - p2);
            int c2 = std::min<int>(pc * p2, static_cast<int>(scale2.mscn.cols()) - p2);
            Image patch2 = scale2.mscn.block(r2, c2, p2, p2);
            patch_features_18(patch2, feats);
            out.features.push_back(
                Eigen::Map<Eigen::VectorXd>(feats.data(), kFeatureDim));
        }
    }
    return out;
}

GaussianFit fit_gaussian(const std::vector<Eigen::VectorXd>& features) {
    if (features.empty())
        throw IngestError("no valid patches to fit (image may be flat)");
    int dim = static_cast<int>(features.front().size());
    GaussianFit fit;
    fit.mu = Eigen::VectorXd::Zero(dim);
    for (const auto& f : features) fit.mu += f;
    fit.mu /= static_cast<double>(features.size());
    fit.cov = Eigen::MatrixXd::Zero(dim, dim);
    if (features.size() > 1) {
        for (const auto& f : features) {
            Eigen::VectorXd d = f - fit.mu;
            fit.cov += d * d.transpose();
        }
        fit.cov /= static_cast<double>(features.size() - 1);
    }
    return fit;
}

NiqeModel fit_niqe_model(const std::vector<Image>& images, int patch_size,
                         double d0, double min_sharpness) {
    std::vector<Eigen::VectorXd> pooled;
    for (const auto& img : images) {
        PatchFeatures pf = mscn_features(img, patch_size, min_sharpness);
        pooled.insert(pooled.end(), pf.features.begin(), pf.features.end());
    }
    GaussianFit fit = fit_gaussian(pooled);
    NiqeModel model;
    model.patch_size = patch_size;
    model.d0 = d0;
    model.mu = fit.mu;
    model.cov = fit.cov;
    return model;
}

void save_niqe_model(const std::string& path, const NiqeModel& model) {
    std::ofstream f(path);
    if (!f) throw IngestError("cannot write model file: " + path);
    f.precision(17);
    f << "unim-niqe " << model.version << "\n";
    f << "dim " << model.mu.size() << "\n";
    f << "patch " << model.patch_size << "\n";
    f << "d0 " << model.d0 << "\n";
    f << "mu\n";
    for (int i = 0; i < model.mu.size(); ++i)
        f << model.mu(i) << (i + 1 < model.mu.size() ? ' ' : '\n');
    f << "cov\n";
    for (int r = 0; r < model.cov.rows(); ++r)
        for (int c = 0; c < model.cov.cols(); ++c)
            f << model.cov(r, c) << (c + 1 < model.cov.cols() ? ' ' : '\n');
}

NiqeModel load_niqe_model(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IngestError("cannot open model file: " + path);
    std::string magic;
    NiqeModel model;
    f >> magic >> model.version;
    if (magic != "unim-niqe")
        throw IngestError("not a niqe model file: " + path);
    std::string key;
    int dim = 0;
    f >> key >> dim;
    if (key != "dim" || dim <= 0) throw IngestError("bad model header: " + path);
    f >> key >> model.patch_size;
    f >> key >> model.d0;
    f >> key;  // "mu"
    model.mu.resize(dim);
    for (int i = 0; i < dim; ++i) f >> model.mu(i);
    f >> key;  // "cov"
    model.cov.resize(dim, dim);
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) f >> model.cov(r, c);
    if (!f) throw IngestError("truncated model file: " + path);
    return model;
}

double niqe_distance(const Eigen::VectorXd& mu_t, const Eigen::MatrixXd& cov_t,
                     const NiqeModel& model) {
    if (mu_t.size() != model.mu.size() || cov_t.rows() != model.cov.rows())
        throw ConfigError("niqe_distance: dimension mismatch");
    Eigen::MatrixXd pooled = 0.5 * (cov_t + model.cov);
    Eigen::VectorXd diff = mu_t - model.mu;
    // Pseudo-inverse through the eigendecomposition; the pooled covariance is
    // symmetric PSD, so clipping small eigenvalues is safe and deterministic.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(pooled);
    const Eigen::VectorXd& evals = es.eigenvalues();
    double tol = std::max(1e-12, evals.cwiseAbs().maxCoeff() * 1e-10);
    Eigen::VectorXd inv = evals.unaryExpr(
        [tol](double v) { return v > tol ? 1.0 / v : 0.0; });
    Eigen::VectorXd proj = es.eigenvectors().transpose() * diff;
    double d2 = (proj.array().square() * inv.array()).sum();
    return std::sqrt(std::max(0.0, d2));
}

ImageQualityResult image_quality(const Image& img, const NiqeModel& model) {
    PatchFeatures pf = mscn_features(img, model.patch_size);
    GaussianFit fit = fit_gaussian(pf.features);
    ImageQualityResult out;
    out.patches = static_cast<int>(pf.features.size());
    out.rejected = pf.rejected;
    out.distance = niqe_distance(fit.mu, fit.cov, model);
    out.score = std::exp(-out.distance / model.d0);
    return out;
}

ImageQualityResult image_quality_file(const std::string& path,
                                      const NiqeModel& model) {
    return image_quality(load_image_gray(path), model);
}

}  // namespace unim::image
