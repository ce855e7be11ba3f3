#include "lobsurv/prob_net.hpp"

#include "json_io.hpp"
#include "lobsurv/types.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace lobsurv {

std::string to_string(HeadKind h) {
    switch (h) {
        case HeadKind::Gaussian: return "gaussian";
        case HeadKind::SkewGaussian: return "skew";
        case HeadKind::BivariateGaussian: return "bivariate";
    }
    return "?";
}

HeadKind head_from_string(std::string_view s) {
    if (s == "gaussian") return HeadKind::Gaussian;
    if (s == "skew" || s == "skew_gaussian") return HeadKind::SkewGaussian;
    if (s == "bivariate" || s == "bivariate_gaussian") return HeadKind::BivariateGaussian;
    throw ConfigError("unknown head kind '" + std::string(s) + "' (expected gaussian, skew or bivariate)");
}

int head_outputs(HeadKind h) {
    switch (h) {
        case HeadKind::Gaussian: return 2;
        case HeadKind::SkewGaussian: return 3;
        case HeadKind::BivariateGaussian: return 5;
    }
    return 0;
}

int head_targets(HeadKind h) { return h == HeadKind::BivariateGaussian ? 2 : 1; }

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double inverse_softplus(double y) { return y > 30.0 ? y : std::log(std::expm1(y)); }

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Loss of one observation and d loss / d raw.
double head_loss(HeadKind head, const double* raw, const double* y, double* draw) {
    using namespace dist;
    switch (head) {
        case HeadKind::Gaussian: {
            const double sigma = softplus(raw[1]) + kSigmaFloor;
            const double r = (y[0] - raw[0]) / sigma;
            if (draw) {
                draw[0] = -r / sigma;
                draw[1] = (1.0 - r * r) / sigma * sigmoid(raw[1]);
            }
            return kLogSqrt2Pi + std::log(sigma) + 0.5 * r * r;
        }
        case HeadKind::SkewGaussian: {
            const double sigma = softplus(raw[1]) + kSigmaFloor;
            const double alpha = raw[2];
            const double r = (y[0] - raw[0]) / sigma;
            const double w = alpha * r;
            if (draw) {
                const double lam = inverse_mills_lower(w);
                draw[0] = (-r + lam * alpha) / sigma;
                draw[1] = (1.0 - r * r + lam * w) / sigma * sigmoid(raw[1]);
                draw[2] = -lam * r;
            }
            return -std::log(2.0) + kLogSqrt2Pi + std::log(sigma) + 0.5 * r * r - log_std_normal_cdf(w);
        }
        case HeadKind::BivariateGaussian: {
            const double s1 = softplus(raw[2]) + kSigmaFloor;
            const double s2 = softplus(raw[3]) + kSigmaFloor;
            const double th = std::tanh(raw[4]);
            const double rho = kRhoScale * th;
            const double r1 = (y[0] - raw[0]) / s1;
            const double r2 = (y[1] - raw[1]) / s2;
            const double d = 1.0 - rho * rho;
            const double q = r1 * r1 - 2.0 * rho * r1 * r2 + r2 * r2;
            if (draw) {
                draw[0] = -(r1 - rho * r2) / (s1 * d);
                draw[1] = -(r2 - rho * r1) / (s2 * d);
                draw[2] = (1.0 / s1 - r1 * (r1 - rho * r2) / (s1 * d)) * sigmoid(raw[2]);
                draw[3] = (1.0 / s2 - r2 * (r2 - rho * r1) / (s2 * d)) * sigmoid(raw[3]);
                const double dl_drho = -rho / d - r1 * r2 / d + rho * q / (d * d);
                draw[4] = dl_drho * kRhoScale * (1.0 - th * th);
            }
            return 2.0 * kLogSqrt2Pi + std::log(s1) + std::log(s2) + 0.5 * std::log(d) + 0.5 * q / d;
        }
    }
    return 0.0;
}

}  // namespace

Theta raw_to_theta(HeadKind head, std::span<const double> raw) {
    if (raw.size() != static_cast<std::size_t>(head_outputs(head))) throw DimensionError("raw output size mismatch");
    Theta t;
    t.kind = head;
    t.mu = raw[0];
    switch (head) {
        case HeadKind::Gaussian: t.sigma = softplus(raw[1]) + kSigmaFloor; break;
        case HeadKind::SkewGaussian:
            t.sigma = softplus(raw[1]) + kSigmaFloor;
            t.alpha = raw[2];
            break;
        case HeadKind::BivariateGaussian:
            t.mu2 = raw[1];
            t.sigma = softplus(raw[2]) + kSigmaFloor;
            t.sigma2 = softplus(raw[3]) + kSigmaFloor;
            t.rho = kRhoScale * std::tanh(raw[4]);
            break;
    }
    return t;
}

double nll(const Theta& t, std::span<const double> y) {
    switch (t.kind) {
        case HeadKind::Gaussian: {
            const double r = (y[0] - t.mu) / t.sigma;
            return std::log(std::sqrt(2.0 * dist::kPi) * t.sigma) + 0.5 * r * r;
        }
        case HeadKind::SkewGaussian: return -dist::sn_logpdf(t.skew(), y[0]);
        case HeadKind::BivariateGaussian: return -dist::bvn_logpdf(t.bivariate(), y[0], y[1]);
    }
    return 0.0;
}

Mlp::Mlp(HeadKind h, int in, int hid) : head(h), input_dim(in), hidden(hid) {
    if (in <= 0 || hid <= 0) throw DimensionError("network dimensions must be positive");
    params = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(param_count()));
}

std::size_t Mlp::param_count() const {
    const auto in = static_cast<std::size_t>(input_dim), h = static_cast<std::size_t>(hidden);
    const auto o = static_cast<std::size_t>(output_dim());
    return h * in + h + o * h + o;
}

Mlp::MatMap Mlp::w1() const { return MatMap(params.data(), hidden, input_dim); }
Mlp::VecMap Mlp::b1() const { return VecMap(params.data() + hidden * input_dim, hidden); }
Mlp::MatMap Mlp::w2() const { return MatMap(params.data() + hidden * input_dim + hidden, output_dim(), hidden); }
Mlp::VecMap Mlp::b2() const {
    return VecMap(params.data() + hidden * input_dim + hidden + output_dim() * hidden, output_dim());
}

void Mlp::init(std::uint64_t seed, std::span<const double> target_mean, std::span<const double> target_std) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    params.setZero();
    const double bound1 = std::sqrt(6.0 / input_dim);
    const double bound2 = std::sqrt(1.0 / hidden);
    double* p = params.data();
    for (int i = 0; i < hidden * input_dim; ++i) *p++ = bound1 * u(rng);
    p += hidden;
    for (int i = 0; i < output_dim() * hidden; ++i) *p++ = bound2 * u(rng);
    double* b = p;
    auto mean = [&](std::size_t i) { return i < target_mean.size() ? target_mean[i] : 0.0; };
    auto sd = [&](std::size_t i) { return i < target_std.size() && target_std[i] > 0.0 ? target_std[i] : 1.0; };
    switch (head) {
        case HeadKind::Gaussian:
        case HeadKind::SkewGaussian:
            b[0] = mean(0);
            b[1] = inverse_softplus(sd(0));
            break;
        case HeadKind::BivariateGaussian:
            b[0] = mean(0);
            b[1] = mean(1);
            b[2] = inverse_softplus(sd(0));
            b[3] = inverse_softplus(sd(1));
            break;
    }
}

Theta forward(const Mlp& net, std::span<const double> z) {
    if (z.size() != static_cast<std::size_t>(net.input_dim)) {
        throw DimensionError("network expects " + std::to_string(net.input_dim) + " inputs, got " +
                             std::to_string(z.size()));
    }
    const Eigen::Map<const Eigen::VectorXd> zv(z.data(), net.input_dim);
    const Eigen::VectorXd h = (net.w1() * zv + net.b1()).cwiseMax(0.0);
    const Eigen::VectorXd raw = net.w2() * h + net.b2();
    return raw_to_theta(net.head, std::span<const double>(raw.data(), static_cast<std::size_t>(raw.size())));
}

RowMatrix forward_raw(const Mlp& net, const RowMatrix& z) {
    if (z.cols() != net.input_dim) throw DimensionError("input width does not match the network");
    RowMatrix h = ((z * net.w1().transpose()).rowwise() + net.b1().transpose()).cwiseMax(0.0);
    return (h * net.w2().transpose()).rowwise() + net.b2().transpose();
}

double loss_and_gradient(const Mlp& net, const RowMatrix& z, const RowMatrix& y, Eigen::VectorXd* grad) {
    if (z.cols() != net.input_dim) throw DimensionError("input width does not match the network");
    if (y.cols() != head_targets(net.head) || y.rows() != z.rows()) throw DimensionError("target shape mismatch");
    const Eigen::Index n = z.rows();
    if (n == 0) throw DimensionError("empty batch");
    const int o = net.output_dim();

    const RowMatrix pre = (z * net.w1().transpose()).rowwise() + net.b1().transpose();
    const RowMatrix h = pre.cwiseMax(0.0);
    const RowMatrix raw = (h * net.w2().transpose()).rowwise() + net.b2().transpose();

    RowMatrix draw(n, o);
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        total += head_loss(net.head, raw.row(i).data(), y.row(i).data(), grad ? draw.row(i).data() : nullptr);
    }
    const double inv_n = 1.0 / static_cast<double>(n);
    if (grad) {
        draw *= inv_n;
        grad->resize(static_cast<Eigen::Index>(net.param_count()));
        double* g = grad->data();
        const int in = net.input_dim, hid = net.hidden;
        RowMatrix dh = draw * net.w2();
        dh = (pre.array() > 0.0).select(dh, 0.0);
        Eigen::Map<RowMatrix>(g, hid, in) = dh.transpose() * z;
        Eigen::Map<Eigen::VectorXd>(g + hid * in, hid) = dh.colwise().sum().transpose();
        Eigen::Map<RowMatrix>(g + hid * in + hid, o, hid) = draw.transpose() * h;
        Eigen::Map<Eigen::VectorXd>(g + hid * in + hid + o * hid, o) = draw.colwise().sum().transpose();
    }
    return total * inv_n;
}

void adam_step(AdamState& s, Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr) {
    if (s.m.size() != params.size()) {
        s.m = Eigen::VectorXd::Zero(params.size());
        s.v = Eigen::VectorXd::Zero(params.size());
        s.t = 0;
    }
    ++s.t;
    s.m = s.beta1 * s.m + (1.0 - s.beta1) * grad;
    s.v = s.beta2 * s.v + (1.0 - s.beta2) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
    const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
    params.array() -= lr * (s.m.array() / c1) / ((s.v.array() / c2).sqrt() + s.eps);
}

void TrainConfig::validate() const {
    if (batch_size <= 0 || learning_rate <= 0.0 || max_epochs <= 0 || patience <= 0 || hidden <= 0) {
        throw ConfigError("training parameters must be positive");
    }
    if (patience > max_epochs) throw ConfigError("patience must not exceed max_epochs");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train_fraction must be in (0, 1)");
}

Theta MlpModel::predict(std::span<const double> raw) const {
    thread_local std::vector<double> z;
    z.resize(raw.size());
    transform.apply(raw, z);
    return forward(net, z);
}

void MlpModel::check_compatible(const KernelConfig& cfg, std::span<const std::string> a) const {
    if (!(cfg == kernel)) throw ModelLoadError("kernel configuration differs from the one the model was trained on");
    if (feature_fingerprint(cfg, a) != fingerprint) {
        throw ModelLoadError("feature fingerprint mismatch: model expects assets/ordering " + fingerprint);
    }
}

namespace {

double chunked_loss(const Mlp& net, const RowMatrix& z, const RowMatrix& y) {
    constexpr Eigen::Index kChunk = 16384;
    double total = 0.0;
    for (Eigen::Index start = 0; start < z.rows(); start += kChunk) {
        const Eigen::Index len = std::min(kChunk, z.rows() - start);
        total += loss_and_gradient(net, z.middleRows(start, len), y.middleRows(start, len), nullptr) *
                 static_cast<double>(len);
    }
    return total / static_cast<double>(z.rows());
}

}  // namespace

MlpModel train(const Dataset& data, HeadKind head, const TrainConfig& cfg, const KernelConfig& kernel,
               const std::vector<std::string>& assets, double horizon_s, TrainReport* report,
               const EpochCallback& on_epoch) {
    cfg.validate();
    if (data.y.cols() != head_targets(head)) {
        throw ConfigError(to_string(head) + " head needs " + std::to_string(head_targets(head)) + " target column(s)");
    }
    if (data.x.rows() != data.y.rows()) throw DimensionError("feature and target row counts differ");
    const Eigen::Index n = data.x.rows();
    const auto n_train = static_cast<Eigen::Index>(std::floor(static_cast<double>(n) * cfg.train_fraction));
    if (n_train < 1 || n - n_train < 1) throw ConfigError("train/validation split leaves an empty part");

    MlpModel model;
    model.kernel = kernel;
    model.assets = assets;
    model.horizon_s = horizon_s;
    model.fingerprint = feature_fingerprint(kernel, assets);
    for (const auto& a : assets) {
        auto names = feature_names(kernel, a);
        model.feature_names.insert(model.feature_names.end(), names.begin(), names.end());
    }
    if (static_cast<Eigen::Index>(model.feature_names.size()) != data.x.cols()) {
        throw DimensionError("dataset has " + std::to_string(data.x.cols()) + " features, kernel/assets imply " +
                             std::to_string(model.feature_names.size()));
    }

    const RowMatrix x_train = data.x.topRows(n_train);
    model.transform = fit_transform(x_train);
    const RowMatrix z_train = model.transform.apply(x_train);
    const RowMatrix y_train = data.y.topRows(n_train);
    const RowMatrix z_val = model.transform.apply(RowMatrix(data.x.bottomRows(n - n_train)));
    const RowMatrix y_val = data.y.bottomRows(n - n_train);

    std::vector<double> t_mean, t_std;
    for (Eigen::Index j = 0; j < y_train.cols(); ++j) {
        const double m = y_train.col(j).mean();
        const double v = (y_train.col(j).array() - m).square().sum() / std::max<double>(1.0, n_train - 1.0);
        t_mean.push_back(m);
        t_std.push_back(std::sqrt(v));
    }

    model.net = Mlp(head, static_cast<int>(data.x.cols()), cfg.hidden);
    model.net.init(cfg.seed, t_mean, t_std);

    TrainReport rep;
    rep.train_rows = static_cast<std::size_t>(n_train);
    rep.val_rows = static_cast<std::size_t>(n - n_train);
    Eigen::VectorXd best = model.net.params;
    rep.best_val_nll = chunked_loss(model.net, z_val, y_val);
    rep.best_epoch = 0;

    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n_train));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    AdamState adam;
    Eigen::VectorXd grad;
    RowMatrix zb, yb;
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        // Fisher-Yates with a portable index draw.
        for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng() % (i + 1)]);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t len = std::min(order.size() - start, static_cast<std::size_t>(cfg.batch_size));
            zb.resize(static_cast<Eigen::Index>(len), z_train.cols());
            yb.resize(static_cast<Eigen::Index>(len), y_train.cols());
            for (std::size_t k = 0; k < len; ++k) {
                zb.row(static_cast<Eigen::Index>(k)) = z_train.row(order[start + k]);
                yb.row(static_cast<Eigen::Index>(k)) = y_train.row(order[start + k]);
            }
            epoch_loss += loss_and_gradient(model.net, zb, yb, &grad) * static_cast<double>(len);
            adam_step(adam, model.net.params, grad, cfg.learning_rate);
        }
        EpochRecord rec{epoch, epoch_loss / static_cast<double>(n_train), chunked_loss(model.net, z_val, y_val)};
        rep.epochs.push_back(rec);
        if (on_epoch) on_epoch(rec);
        if (rec.val_nll < rep.best_val_nll) {
            rep.best_val_nll = rec.val_nll;
            rep.best_epoch = epoch;
            best = model.net.params;
        } else if (epoch - rep.best_epoch >= cfg.patience) {
            rep.stopped_early = true;
            break;
        }
    }
    model.net.params = best;
    if (report) *report = std::move(rep);
    return model;
}

std::string model_to_json(const MlpModel& m) {
    nlohmann::json j;
    j["format"] = "lobsurv-model";
    j["version"] = kModelFormatVersion;
    j["head"] = to_string(m.net.head);
    j["input_dim"] = m.net.input_dim;
    j["hidden"] = m.net.hidden;
    j["output_dim"] = m.net.output_dim();
    j["assets"] = m.assets;
    j["horizon_s"] = m.horizon_s;
    j["kernel"] = {{"betas", m.kernel.betas}, {"etas", m.kernel.etas}, {"volume_map", "identity"}};
    j["feature_names"] = m.feature_names;
    j["fingerprint"] = m.fingerprint;
    j["transform"] = detail::to_json(m.transform);
    const auto& p = m.net.params;
    const auto in = m.net.input_dim, h = m.net.hidden, o = m.net.output_dim();
    auto slice = [&](Eigen::Index off, Eigen::Index len) { return std::vector<double>(p.data() + off, p.data() + off + len); };
    j["weights"] = {{"w1", slice(0, h * in)},
                    {"b1", slice(h * in, h)},
                    {"w2", slice(h * in + h, o * h)},
                    {"b2", slice(h * in + h + o * h, o)}};
    return j.dump(1);
}

MlpModel model_from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ModelLoadError(std::string("model file is not valid JSON: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "lobsurv-model") throw ModelLoadError("not a lobsurv model file");
        const int version = j.at("version").get<int>();
        if (version != kModelFormatVersion) {
            throw ModelLoadError("unsupported model version " + std::to_string(version));
        }
        MlpModel m;
        m.net = Mlp(head_from_string(j.at("head").get<std::string>()), j.at("input_dim").get<int>(),
                    j.at("hidden").get<int>());
        if (j.at("output_dim").get<int>() != m.net.output_dim()) throw ModelLoadError("output size does not match head");
        m.assets = j.at("assets").get<std::vector<std::string>>();
        m.horizon_s = j.at("horizon_s").get<double>();
        m.kernel.betas = j.at("kernel").at("betas").get<std::vector<double>>();
        m.kernel.etas = j.at("kernel").at("etas").get<std::vector<double>>();
        m.kernel.validate();
        m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        m.fingerprint = j.at("fingerprint").get<std::string>();
        if (feature_fingerprint(m.kernel, m.assets) != m.fingerprint) {
            throw ModelLoadError("stored fingerprint does not match the stored kernel configuration");
        }
        m.transform = detail::transform_from_json(j.at("transform"));
        if (m.transform.size() != static_cast<std::size_t>(m.net.input_dim) ||
            m.feature_names.size() != m.transform.size()) {
            throw ModelLoadError("transform size does not match the input dimension");
        }
        const auto& w = j.at("weights");
        std::vector<double> flat;
        for (const char* key : {"w1", "b1", "w2", "b2"}) {
            auto part = w.at(key).get<std::vector<double>>();
            flat.insert(flat.end(), part.begin(), part.end());
        }
        if (flat.size() != m.net.param_count()) throw ModelLoadError("weight count does not match the dimensions");
        m.net.params = Eigen::Map<Eigen::VectorXd>(flat.data(), static_cast<Eigen::Index>(flat.size()));
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ModelLoadError(std::string("malformed model file: ") + e.what());
    } catch (const ConfigError& e) {
        throw ModelLoadError(std::string("malformed model file: ") + e.what());
    } catch (const DimensionError& e) {
        throw ModelLoadError(std::string("malformed model file: ") + e.what());
    }
}

void save_model(const MlpModel& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write model file " + path);
    out << model_to_json(m) << '\n';
    if (!out) throw std::runtime_error("failed writing model file " + path);
}

MlpModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelLoadError("cannot open model file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str());
}

}  // namespace lobsurv
