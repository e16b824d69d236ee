#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace unim::image {

// Grayscale image, row-major pixel grid, values in [0, 255].
using Image = Eigen::MatrixXd;

Image load_image_gray(const std::string& path);
void save_image_gray(const std::string& path, const Image& img);

// 2x2 box-average downsampling (odd trailing row/column dropped).
Image downsample2(const Image& img);

// Local luminance normalization: mscn = (I - mu) / (sigma + 1), with mu and
// sigma taken over a 7x7 Gaussian window (sigma = 7/6), symmetric padding.
struct MscnField {
    Image mscn;
    Image sigma;  // local deviation field, used for patch selection
};

MscnField compute_mscn(const Image& img);

// Generalized Gaussian fit by moment matching.
struct GgdFit {
    double alpha = 2.0;
    double sigma2 = 1.0;
};

GgdFit fit_ggd(const std::vector<double>& values);

// Asymmetric generalized Gaussian fit for pairwise products.
struct AggdFit {
    double alpha = 2.0;
    double mean = 0.0;
    double sigma_l2 = 1.0;
    double sigma_r2 = 1.0;
};

AggdFit fit_aggd(const std::vector<double>& values);

// Per-patch natural scene statistics: GGD of the MSCN coefficients plus AGGD
// of the four pairwise-product orientations, at two scales. 18 features per
// scale, 36 per patch.
inline constexpr int kFeatureDim = 36;

struct PatchFeatures {
    std::vector<Eigen::VectorXd> features;  // one kFeatureDim vector per patch
    int rejected = 0;                       // degenerate (flat) patches skipped
};

// Tiles the image with non-overlapping patches of the given size and extracts
// feature vectors. Throws unim::IngestError when the image has fewer than two
// patch sizes per side. min_sharpness, when positive, keeps only patches whose
// mean local deviation is at least that fraction of the sharpest patch
// (used during model fitting).
PatchFeatures mscn_features(const Image& img, int patch_size = 96,
                            double min_sharpness = 0.0);

struct GaussianFit {
    Eigen::VectorXd mu;
    Eigen::MatrixXd cov;
};

GaussianFit fit_gaussian(const std::vector<Eigen::VectorXd>& features);

struct NiqeModel {
    int version = 1;
    int patch_size = 96;
    double d0 = 25.0;  // distance scale for the exponential score mapping
    Eigen::VectorXd mu;
    Eigen::MatrixXd cov;
};

// Fits the reference statistics on a corpus of pristine images. Patches are
// filtered by relative sharpness so flat regions do not dominate.
NiqeModel fit_niqe_model(const std::vector<Image>& images, int patch_size = 96,
                         double d0 = 25.0, double min_sharpness = 0.75);

// Versioned text serialization (dimension header + matrices).
void save_niqe_model(const std::string& path, const NiqeModel& model);
NiqeModel load_niqe_model(const std::string& path);

// sqrt( (mu_t-mu_n)^T ((cov_t+cov_n)/2)^+ (mu_t-mu_n) ), pseudo-inverse when
// the pooled covariance is singular. Symmetric in the two distributions.
double niqe_distance(const Eigen::VectorXd& mu_t, const Eigen::MatrixXd& cov_t,
                     const NiqeModel& model);

struct ImageQualityResult {
    double distance = 0.0;
    double score = 0.0;  // exp(-distance / d0)
    int patches = 0;
    int rejected = 0;
};

ImageQualityResult image_quality(const Image& img, const NiqeModel& model);
ImageQualityResult image_quality_file(const std::string& path,
                                      const NiqeModel& model);

}  // namespace unim::image
