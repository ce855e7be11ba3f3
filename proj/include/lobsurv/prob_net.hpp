#pragma once

#include "lobsurv/dist_math.hpp"
#include "lobsurv/flow_features.hpp"
#include "lobsurv/preprocess.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace lobsurv {

enum class HeadKind { Gaussian, SkewGaussian, BivariateGaussian };

std::string to_string(HeadKind h);
HeadKind head_from_string(std::string_view s);
/// Raw network outputs: 2, 3 or 5.
int head_outputs(HeadKind h);
/// Targets per observation: 1 or 2.
int head_targets(HeadKind h);

inline constexpr double kSigmaFloor = 1e-6;
inline constexpr double kRhoScale = 0.999;

/// Predicted distribution parameters of the horizon move (bps).
struct Theta {
    HeadKind kind = HeadKind::Gaussian;
    double mu = 0.0;
    double sigma = 1.0;
    double alpha = 0.0;  // skew head
    double mu2 = 0.0;    // bivariate head
    double sigma2 = 1.0;
    double rho = 0.0;

    dist::SkewNormalParams skew() const { return {mu, sigma, kind == HeadKind::SkewGaussian ? alpha : 0.0}; }
    dist::BivariateNormalParams bivariate() const { return {mu, mu2, sigma, sigma2, rho}; }
};

double softplus(double x);
double inverse_softplus(double y);

/// Maps a raw output row to head parameters.
Theta raw_to_theta(HeadKind head, std::span<const double> raw);

double nll(const Theta& theta, std::span<const double> y);

/// One hidden ReLU layer. Parameters are stored flat as
/// [W1 (hidden x input, row-major), b1, W2 (out x hidden, row-major), b2].
struct Mlp {
    HeadKind head = HeadKind::Gaussian;
    int input_dim = 0;
    int hidden = 64;
    Eigen::VectorXd params;

    Mlp() = default;
    Mlp(HeadKind head, int input_dim, int hidden = 64);

    int output_dim() const { return head_outputs(head); }
    std::size_t param_count() const;

    using MatMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
    using VecMap = Eigen::Map<const Eigen::VectorXd>;
    MatMap w1() const;
    VecMap b1() const;
    MatMap w2() const;
    VecMap b2() const;

    /// Kaiming-style uniform weights, zero hidden biases, output bias from the
    /// target scale (mu = target mean, sigma = target std).
    void init(std::uint64_t seed, std::span<const double> target_mean = {}, std::span<const double> target_std = {});
};

/// Forward pass on a normalized input.
Theta forward(const Mlp& net, std::span<const double> z);
/// Raw outputs for a batch (rows = observations).
RowMatrix forward_raw(const Mlp& net, const RowMatrix& z);

/// Mean NLL over the batch and, if `grad` is non-null, its exact gradient with
/// respect to `net.params`. ReLU uses subgradient 0 at the kink.
double loss_and_gradient(const Mlp& net, const RowMatrix& z, const RowMatrix& y, Eigen::VectorXd* grad);

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    Eigen::VectorXd m;
    Eigen::VectorXd v;
    long t = 0;
};

void adam_step(AdamState& state, Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr);

struct TrainConfig {
    int batch_size = 4096;
    double learning_rate = 1e-3;
    int max_epochs = 1000;
    int patience = 100;
    std::uint64_t seed = 42;
    int hidden = 64;
    double train_fraction = 0.5;  // chronological split

    void validate() const;
};

struct EpochRecord {
    int epoch = 0;
    double train_nll = 0.0;
    double val_nll = 0.0;
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    int best_epoch = -1;
    double best_val_nll = 0.0;
    bool stopped_early = false;
    std::size_t train_rows = 0;
    std::size_t val_rows = 0;
};

/// Everything needed to score raw features: network, transform, and the
/// feature contract it was trained under.
struct MlpModel {
    Mlp net;
    FeatureTransform transform;
    KernelConfig kernel;
    std::vector<std::string> assets;
    std::vector<std::string> feature_names;
    std::string fingerprint;
    double horizon_s = 1.0;

    /// Transforms raw features and runs the network.
    Theta predict(std::span<const double> raw) const;
    /// Throws ModelLoadError unless the model was trained on this feature layout.
    void check_compatible(const KernelConfig& cfg, std::span<const std::string> assets) const;
};

struct Dataset {
    RowMatrix x;  // raw features, time-ordered rows
    RowMatrix y;  // targets (bps)
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Chronological split, transform fitted on the training part, minibatch Adam
/// with seeded shuffling and early stopping on validation NLL. The returned
/// model carries the best-validation weights.
MlpModel train(const Dataset& data, HeadKind head, const TrainConfig& cfg, const KernelConfig& kernel,
               const std::vector<std::string>& assets, double horizon_s, TrainReport* report = nullptr,
               const EpochCallback& on_epoch = {});

inline constexpr int kModelFormatVersion = 1;

std::string model_to_json(const MlpModel& m);
MlpModel model_from_json(std::string_view text);
void save_model(const MlpModel& m, const std::string& path);
MlpModel load_model(const std::string& path);

}  // namespace lobsurv
