// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "birkhoff/complexity.hpp"
#include "birkhoff/harmony.hpp"
#include "birkhoff/ingest.hpp"
#include "birkhoff/io.hpp"
#include "birkhoff/score.hpp"
#include "birkhoff/symmetry.hpp"

namespace birkhoff {

// ---------------------------------------------------------------------------
// Basic features

enum class Feature : std::size_t { IH, CPH, SSF, PS, RS, PHE, RHE, KC };

inline constexpr std::size_t kFeatureCount = 8;
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {"IH",  "CPH", "SSF", "PS",
                                                                              "RS",  "PHE", "RHE", "KC"};

struct FeatureVector8 {
    std::array<double, kFeatureCount> values{};
    std::array<bool, kFeatureCount> degenerate{};

    double& operator[](Feature f) noexcept { return values[static_cast<std::size_t>(f)]; }
    double operator[](Feature f) const noexcept { return values[static_cast<std::size_t>(f)]; }
    void flag(Feature f) noexcept { degenerate[static_cast<std::size_t>(f)] = true; }
    bool flagged(Feature f) const noexcept { return degenerate[static_cast<std::size_t>(f)]; }
};

struct FeatureConfig {
    IntervalWeights interval = IntervalWeights::from_categories();
    TensionWeights tension{};
    SkewnessWeights skewness{};
    EntropyWeights entropy{};
    CompressorSetting compressor{};
};

/// Runs every extractor. Recoverable conditions (no simultaneous notes, no
/// chords, too short for a self-similarity scan, zero variance, degenerate
/// byte stream) produce a fallback value plus a flag; an empty score throws.
inline FeatureVector8 extract_features(const Score& score, const FeatureConfig& cfg = {}) {
    if (score.notes.empty()) throw Error(ErrorKind::EmptyScore, "score '" + score.id + "' has no notes");
    FeatureVector8 f;
    try {
        f[Feature::IH] = interval_harmony(score, cfg.interval);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::NoSonorities) throw;
        f[Feature::IH] = 0.0;
        f.flag(Feature::IH);
    }
    try {
        f[Feature::CPH] = chord_progression_harmony(score, cfg.tension);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::NoChords) throw;
        f[Feature::CPH] = 0.0;
        f.flag(Feature::CPH);
    }
    try {
        f[Feature::SSF] = self_similarity_fitness(score);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::ScoreTooShort) throw;
        f[Feature::SSF] = 0.0;
        f.flag(Feature::SSF);
    }
    const auto sk = skewness_feature(score, cfg.skewness);
    f[Feature::PS] = sk.pitch;
    f[Feature::RS] = sk.rhythm;
    if (sk.pitch_degenerate) f.flag(Feature::PS);
    if (sk.rhythm_degenerate) f.flag(Feature::RS);

    const auto ent = entropy_feature(score, cfg.entropy);
    f[Feature::PHE] = ent.pitch;
    f[Feature::RHE] = ent.rhythm;

    const auto kc = kolmogorov_complexity(score, cfg.compressor);
    f[Feature::KC] = kc.feature;
    if (kc.degenerate) f.flag(Feature::KC);
    return f;
}

/// Extracts features for every score on `jobs` worker threads; output order
/// matches input order and does not depend on `jobs`.
inline std::vector<FeatureVector8> extract_all(std::span<const Score> scores, const FeatureConfig& cfg = {},
                                               unsigned jobs = 1) {
    std::vector<FeatureVector8> out(scores.size());
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(scores.size(), 1))));
    if (jobs == 1) {
        for (std::size_t i = 0; i < scores.size(); ++i) out[i] = extract_features(scores[i], cfg);
        return out;
    }
    std::vector<std::exception_ptr> errors(jobs);
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < jobs; ++w)
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < scores.size(); i += jobs) out[i] = extract_features(scores[i], cfg);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

// ---------------------------------------------------------------------------
// Normalization

using NormalizedFeatures = std::array<double, kFeatureCount>;

struct Normalizer {
    std::array<double, kFeatureCount> min{};
    std::array<double, kFeatureCount> max{};
    std::array<bool, kFeatureCount> constant{};

    NormalizedFeatures transform(const FeatureVector8& f) const {
        NormalizedFeatures x{};
        for (std::size_t i = 0; i < kFeatureCount; ++i)
            x[i] = std::clamp((f.values[i] - min[i]) / (max[i] - min[i]), 0.0, 1.0);
        return x;
    }
};

/// Min-max per feature. A feature constant over the training set gets
/// max = min + 1 and is flagged.
inline Normalizer fit_normalizer(std::span<const FeatureVector8> train) {
    if (train.empty()) throw Error(ErrorKind::EmptyTrainingSet, "cannot fit a normalizer on no samples");
    Normalizer n;
    n.min = train.front().values;
    n.max = train.front().values;
    for (const auto& f : train)
        for (std::size_t i = 0; i < kFeatureCount; ++i) {
            n.min[i] = std::min(n.min[i], f.values[i]);
            n.max[i] = std::max(n.max[i], f.values[i]);
        }
    for (std::size_t i = 0; i < kFeatureCount; ++i)
        if (!(n.max[i] > n.min[i])) {
            n.max[i] = n.min[i] + 1.0;
            n.constant[i] = true;
        }
    return n;
}

// ---------------------------------------------------------------------------
// Numerics

inline double sigmoid(double z) noexcept {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

inline double softplus(double z) noexcept { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

/// Inverse of softplus for v > 0.
inline double softplus_inverse(double v) noexcept { return v > 30 ? v + std::log(-std::expm1(-v)) : std::log(std::expm1(v)); }

/// Binary cross-entropy of sigmoid(z) against y in {0, 1}, computed from the logit.
inline double logit_cross_entropy(double z, double y) noexcept { return softplus(z) - y * z; }

inline double label_value(Label l) noexcept { return l == Label::composer ? 1.0 : 0.0; }

struct TrainingConfig {
    double learning_rate = 0.01;
    std::size_t iterations = 1000;
};

// ---------------------------------------------------------------------------
// Group logistic regressions

struct LogisticModel {
    std::vector<double> weights;
    double bias = 0.0;

    double logit(std::span<const double> x) const {
        double z = bias;
        for (std::size_t i = 0; i < weights.size(); ++i) z += weights[i] * x[i];
        return z;
    }
    double predict(std::span<const double> x) const { return sigmoid(logit(x)); }
};

/// Rows of a design matrix for one logistic regression.
using Design = std::vector<std::vector<double>>;

struct LossGradient {
    double loss = 0.0;
    std::vector<double> gradient;  // d loss / d weights..., then d loss / d bias
};

/// Mean cross-entropy and its gradient: (1/n) * sum (p - y) * [x, 1].
inline LossGradient logistic_loss_gradient(const LogisticModel& m, const Design& x, std::span<const double> y) {
    const std::size_t d = m.weights.size();
    LossGradient out;
    out.gradient.assign(d + 1, 0.0);
    for (std::size_t r = 0; r < x.size(); ++r) {
        const double z = m.logit(x[r]);
        out.loss += logit_cross_entropy(z, y[r]);
        const double residual = sigmoid(z) - y[r];
        for (std::size_t j = 0; j < d; ++j) out.gradient[j] += residual * x[r][j];
        out.gradient[d] += residual;
    }
    const double n = static_cast<double>(x.size());
    out.loss /= n;
    for (double& g : out.gradient) g /= n;
    return out;
}

/// Full-batch gradient descent from zero weights.
inline LogisticModel train_logistic(const Design& x, std::span<const double> y, const TrainingConfig& cfg) {
    if (x.empty()) throw Error(ErrorKind::EmptyTrainingSet, "no training rows");
    LogisticModel m;
    m.weights.assign(x.front().size(), 0.0);
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        const auto lg = logistic_loss_gradient(m, x, y);
        if (!std::isfinite(lg.loss))
            throw Error(ErrorKind::NonFiniteLoss, "logistic loss diverged at iteration " + std::to_string(it));
        for (std::size_t j = 0; j < m.weights.size(); ++j) m.weights[j] -= cfg.learning_rate * lg.gradient[j];
        m.bias -= cfg.learning_rate * lg.gradient.back();
    }
    return m;
}

enum class Aesthetic : std::size_t { harmony, symmetry, entropy, k_complexity };

inline constexpr std::array<std::string_view, 4> kAestheticNames = {"harmony", "symmetry", "entropy", "k_complexity"};

/// Basic features feeding each aesthetic feature's regression.
inline const std::array<std::vector<Feature>, 4>& feature_groups() {
    static const std::array<std::vector<Feature>, 4> groups = {{
        {Feature::IH, Feature::CPH},
        {Feature::SSF, Feature::PS, Feature::RS},
        {Feature::PHE, Feature::RHE},
        {Feature::KC},
    }};
    return groups;
}

inline std::vector<double> group_inputs(const NormalizedFeatures& x, Aesthetic a) {
    std::vector<double> row;
    for (auto f : feature_groups()[static_cast<std::size_t>(a)]) row.push_back(x[static_cast<std::size_t>(f)]);
    return row;
}

struct LabeledFeatures {
    NormalizedFeatures x{};
    Label label = Label::ai;
};

using GroupModels = std::array<LogisticModel, 4>;

inline void require_both_labels(auto&& labels) {
    bool pos = false, neg = false;
    for (Label l : labels) (l == Label::composer ? pos : neg) = true;
    if (!pos || !neg) throw Error(ErrorKind::SingleClassTraining, "training data must contain both labels");
}

/// Each aesthetic feature's regression is fit against the composer/ai label.
inline GroupModels train_group_lrs(std::span<const LabeledFeatures> train, const TrainingConfig& cfg = {}) {
    if (train.empty()) throw Error(ErrorKind::EmptyTrainingSet, "no training samples");
    std::vector<Label> labels;
    std::vector<double> y;
    for (const auto& s : train) {
        labels.push_back(s.label);
        y.push_back(label_value(s.label));
    }
    require_both_labels(labels);
    GroupModels models;
    for (std::size_t g = 0; g < 4; ++g) {
        Design x;
        x.reserve(train.size());
        for (const auto& s : train) x.push_back(group_inputs(s.x, static_cast<Aesthetic>(g)));
        models[g] = train_logistic(x, y, cfg);
    }
    return models;
}

struct AestheticVector4 {
    std::array<double, 4> values{};  // H, S, E, K

    double& operator[](Aesthetic a) noexcept { return values[static_cast<std::size_t>(a)]; }
    double operator[](Aesthetic a) const noexcept { return values[static_cast<std::size_t>(a)]; }
};

inline AestheticVector4 aesthetic_vector(const NormalizedFeatures& x, const GroupModels& lrs) {
    AestheticVector4 a;
    for (std::size_t g = 0; g < 4; ++g) a.values[g] = lrs[g].predict(group_inputs(x, static_cast<Aesthetic>(g)));
    return a;
}

// ---------------------------------------------------------------------------
// Order / complexity quotient

inline constexpr double kDenominatorFloor = 1e-3;

/// Effective weights of (w1*H + w2*S + t1) / (w3*E + w4*K + t2).
struct QuotientWeights {
    double omega1 = 1.0, omega2 = 1.0, omega3 = 1.0, omega4 = 1.0;
    double theta1 = 0.0, theta2 = 1.0;
};

inline double birkhoff_measure(const AestheticVector4& a, const QuotientWeights& w) {
    using enum Aesthetic;
    const double den = w.omega3 * a[entropy] + w.omega4 * a[k_complexity] + w.theta2;
    if (!(den >= kDenominatorFloor))
        throw Error(ErrorKind::DenominatorUnderflow, "quotient denominator " + std::to_string(den) + " below floor");
    return (w.omega1 * a[harmony] + w.omega2 * a[symmetry] + w.theta1) / den;
}

/// Trainable form of the quotient. The denominator coefficients are stored
/// as softplus pre-images so that w3, w4 >= 0 and t2 >= kDenominatorFloor
/// hold for every parameter value; the denominator therefore stays above the
/// floor for all E, K in [0, 1].
struct QuotientModel {
    double omega1 = 1.0;
    double omega2 = 1.0;
    double theta1 = 0.0;
    double rho3 = softplus_inverse(1.0);
    double rho4 = softplus_inverse(1.0);
    double rho_theta = softplus_inverse(1.0 - kDenominatorFloor);
    /// Terms excluded by ablation contribute nothing and are never updated.
    std::array<bool, 4> active{true, true, true, true};

    static constexpr std::size_t kParamCount = 6;

    double omega3() const noexcept { return softplus(rho3); }
    double omega4() const noexcept { return softplus(rho4); }
    double theta2() const noexcept { return softplus(rho_theta) + kDenominatorFloor; }

    QuotientWeights weights() const noexcept {
        return {active[0] ? omega1 : 0.0, active[1] ? omega2 : 0.0, active[2] ? omega3() : 0.0,
                active[3] ? omega4() : 0.0, theta1,                  theta2()};
    }

    std::array<double, kParamCount> params() const noexcept { return {omega1, omega2, theta1, rho3, rho4, rho_theta}; }
    void set_params(const std::array<double, kParamCount>& p) noexcept {
        omega1 = p[0];
        omega2 = p[1];
        theta1 = p[2];
        rho3 = p[3];
        rho4 = p[4];
        rho_theta = p[5];
    }
    /// Which raw parameters training may move.
    std::array<bool, kParamCount> trainable() const noexcept {
        return {active[0], active[1], true, active[2], active[3], true};
    }
};

struct QuotientSample {
    AestheticVector4 a;
    Label label = Label::ai;
};

struct QuotientLossGradient {
    double loss = 0.0;
    std::array<double, QuotientModel::kParamCount> gradient{};  // over QuotientModel::params()
};

/// Mean cross-entropy of sigmoid(M) and its analytic gradient with respect to
/// the raw parameters (omega1, omega2, theta1, rho3, rho4, rho_theta).
inline QuotientLossGradient quotient_loss_gradient(const QuotientModel& m, std::span<const QuotientSample> data) {
    using enum Aesthetic;
    const auto w = m.weights();
    const double s3 = m.active[2] ? sigmoid(m.rho3) : 0.0;  // d softplus / d rho
    const double s4 = m.active[3] ? sigmoid(m.rho4) : 0.0;
    const double st = sigmoid(m.rho_theta);
    QuotientLossGradient out;
    for (const auto& s : data) {
        const double h = m.active[0] ? s.a[harmony] : 0.0;
        const double sy = m.active[1] ? s.a[symmetry] : 0.0;
        const double num = w.omega1 * s.a[harmony] + w.omega2 * s.a[symmetry] + w.theta1;
        const double den = w.omega3 * s.a[entropy] + w.omega4 * s.a[k_complexity] + w.theta2;
        const double measure = num / den;
        const double y = label_value(s.label);
        out.loss += logit_cross_entropy(measure, y);
        const double r = sigmoid(measure) - y;  // d loss / d measure
        const double q = -num / (den * den);    // d measure / d den
        out.gradient[0] += r * h / den;
        out.gradient[1] += r * sy / den;
        out.gradient[2] += r / den;
        out.gradient[3] += r * q * s.a[entropy] * s3;
        out.gradient[4] += r * q * s.a[k_complexity] * s4;
        out.gradient[5] += r * q * st;
    }
    const double n = static_cast<double>(data.size());
    out.loss /= n;
    for (double& g : out.gradient) g /= n;
    return out;
}

inline double quotient_loss(const QuotientModel& m, std::span<const QuotientSample> data) {
    return quotient_loss_gradient(m, data).loss;
}

/// Full-batch gradient descent at a fixed learning rate. When a step would
/// raise the loss, that step alone is retried at half size (repeatedly, down
/// to lr / 2^30, after which the parameters stay put for the iteration).
inline QuotientModel train_final(std::span<const QuotientSample> train, const TrainingConfig& cfg = {},
                                 std::array<bool, 4> active = {true, true, true, true}) {
    if (train.empty()) throw Error(ErrorKind::EmptyTrainingSet, "no training samples");
    std::vector<Label> labels;
    for (const auto& s : train) labels.push_back(s.label);
    require_both_labels(labels);

    QuotientModel m;
    m.active = active;
    const auto trainable = m.trainable();
    for (std::size_t it = 0; it < cfg.iterations; ++it) {
        const auto lg = quotient_loss_gradient(m, train);
        if (!std::isfinite(lg.loss))
            throw Error(ErrorKind::NonFiniteLoss, "quotient loss diverged at iteration " + std::to_string(it));
        const auto start = m.params();
        double step = cfg.learning_rate;
        for (int halvings = 0; halvings <= 30; ++halvings, step *= 0.5) {
            auto p = start;
            for (std::size_t k = 0; k < p.size(); ++k)
                if (trainable[k]) p[k] -= step * lg.gradient[k];
            QuotientModel trial = m;
            trial.set_params(p);
            const double loss = quotient_loss(trial, train);
            if (std::isfinite(loss) && loss <= lg.loss) {
                m = trial;
                break;
            }
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// Whole model

struct ModelParams {
    static constexpr int kFormatVersion = 1;

    QuotientModel quotient{};
    GroupModels groups{};
    Normalizer normalizer{};
    FeatureConfig features{};
    TrainingConfig training{};
};

struct Prediction {
    FeatureVector8 raw;
    NormalizedFeatures normalized{};
    AestheticVector4 aesthetic;
    double measure = 0.0;
    double probability = 0.5;
    Label label = Label::composer;
};

inline Prediction predict_features(const FeatureVector8& raw, const ModelParams& p) {
    Prediction out;
    out.raw = raw;
    out.normalized = p.normalizer.transform(raw);
    out.aesthetic = aesthetic_vector(out.normalized, p.groups);
    out.measure = birkhoff_measure(out.aesthetic, p.quotient.weights());
    out.probability = sigmoid(out.measure);
    out.label = out.probability >= 0.5 ? Label::composer : Label::ai;
    return out;
}

inline Prediction predict(const Score& score, const ModelParams& p) {
    return predict_features(extract_features(score, p.features), p);
}

/// Fits normalizer, group regressions and quotient on precomputed features.
inline ModelParams train_on_features(std::span<const FeatureVector8> features, std::span<const Label> labels,
                                     const FeatureConfig& fcfg = {}, const TrainingConfig& tcfg = {},
                                     std::array<bool, 4> active = {true, true, true, true}) {
    if (features.size() != labels.size()) throw Error(ErrorKind::InvalidArgument, "features/labels size mismatch");
    ModelParams p;
    p.features = fcfg;
    p.training = tcfg;
    p.normalizer = fit_normalizer(features);
    std::vector<LabeledFeatures> lf;
    lf.reserve(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) lf.push_back({p.normalizer.transform(features[i]), labels[i]});
    p.groups = train_group_lrs(lf, tcfg);
    std::vector<QuotientSample> qs;
    qs.reserve(lf.size());
    for (const auto& s : lf) qs.push_back({aesthetic_vector(s.x, p.groups), s.label});
    p.quotient = train_final(qs, tcfg, active);
    return p;
}

/// Scores must carry labels.
inline ModelParams train_pipeline(std::span<const Score> train, const FeatureConfig& fcfg = {},
                                  const TrainingConfig& tcfg = {}, unsigned jobs = 1) {
    std::vector<Label> labels;
    for (const auto& s : train) {
        if (!s.label) throw Error(ErrorKind::SchemaError, "training score '" + s.id + "' has no label");
        labels.push_back(*s.label);
    }
    const auto feats = extract_all(train, fcfg, jobs);
    return train_on_features(feats, labels, fcfg, tcfg);
}

// ---------------------------------------------------------------------------
// Model file (.bam.json)

namespace detail {

template <std::size_t N>
nlohmann::json to_json_array(const std::array<double, N>& a) {
    return nlohmann::json(std::vector<double>(a.begin(), a.end()));
}

template <class T, std::size_t N>
std::array<T, N> array_from_json(const nlohmann::json& j, const std::string& where) {
    if (!j.is_array() || j.size() != N)
        throw Error(ErrorKind::ModelFormat, where + ": expected an array of " + std::to_string(N));
    std::array<T, N> a{};
    for (std::size_t i = 0; i < N; ++i) a[i] = j[i].get<T>();
    return a;
}

inline const nlohmann::json& model_field(const nlohmann::json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw Error(ErrorKind::ModelFormat, where + ": missing '" + key + "'");
    return j.at(key);
}

}  // namespace detail

inline nlohmann::json model_to_json(const ModelParams& p) {
    using nlohmann::json;
    const auto& q = p.quotient;
    json groups = json::object();
    for (std::size_t g = 0; g < 4; ++g)
        groups[std::string(kAestheticNames[g])] = {{"weights", p.groups[g].weights}, {"bias", p.groups[g].bias}};
    json names = json::array();
    for (auto n : kFeatureNames) names.push_back(std::string(n));
    const auto& f = p.features;
    return {
        {"format", "birkhoff-aesthetic-model"},
        {"version", ModelParams::kFormatVersion},
        {"quotient",
         {{"omega", {q.omega1, q.omega2, q.omega3(), q.omega4()}},
          {"theta", {q.theta1, q.theta2()}},
          {"rho", {{"omega3", q.rho3}, {"omega4", q.rho4}, {"theta2", q.rho_theta}}},
          {"epsilon", kDenominatorFloor},
          {"active", std::vector<bool>(q.active.begin(), q.active.end())}}},
        {"group_models", std::move(groups)},
        {"normalizer",
         {{"features", std::move(names)},
          {"min", detail::to_json_array(p.normalizer.min)},
          {"max", detail::to_json_array(p.normalizer.max)},
          {"constant", std::vector<bool>(p.normalizer.constant.begin(), p.normalizer.constant.end())}}},
        {"feature_config",
         {{"interval", {{"alpha", detail::to_json_array(f.interval.alpha)}, {"theta_ih", f.interval.theta_ih}}},
          {"tension", {{"lambda", detail::to_json_array(f.tension.lambda)}}},
          {"skewness", {{"beta1", f.skewness.beta1}, {"beta2", f.skewness.beta2}, {"theta_sk", f.skewness.theta_sk}}},
          {"entropy", {{"eta1", f.entropy.eta1}, {"eta2", f.entropy.eta2}, {"theta_e", f.entropy.theta_e}}}}},
        {"compressor", {{"algorithm", f.compressor.algorithm}, {"level", f.compressor.level}}},
        {"training", {{"learning_rate", p.training.learning_rate}, {"iterations", p.training.iterations}}},
    };
}

/// Parses and validates a model document. The stored omega3/omega4/theta2
/// must agree with their softplus pre-images, and the denominator must stay
/// above the floor over the whole [0, 1] box of E and K.
inline ModelParams model_from_json(const nlohmann::json& j) {
    using detail::model_field;
    try {
        if (model_field(j, "format", "model") != "birkhoff-aesthetic-model")
            throw Error(ErrorKind::ModelFormat, "not a birkhoff aesthetic model");
        if (model_field(j, "version", "model").get<int>() != ModelParams::kFormatVersion)
            throw Error(ErrorKind::ModelFormat, "unsupported model version");
        ModelParams p;
        const auto& q = model_field(j, "quotient", "model");
        const auto omega = detail::array_from_json<double, 4>(model_field(q, "omega", "quotient"), "quotient.omega");
        const auto theta = detail::array_from_json<double, 2>(model_field(q, "theta", "quotient"), "quotient.theta");
        const auto& rho = model_field(q, "rho", "quotient");
        p.quotient.omega1 = omega[0];
        p.quotient.omega2 = omega[1];
        p.quotient.theta1 = theta[0];
        p.quotient.rho3 = model_field(rho, "omega3", "quotient.rho").get<double>();
        p.quotient.rho4 = model_field(rho, "omega4", "quotient.rho").get<double>();
        p.quotient.rho_theta = model_field(rho, "theta2", "quotient.rho").get<double>();
        p.quotient.active = detail::array_from_json<bool, 4>(model_field(q, "active", "quotient"), "quotient.active");
        auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); };
        if (!close(omega[2], p.quotient.omega3()) || !close(omega[3], p.quotient.omega4()) ||
            !close(theta[1], p.quotient.theta2()))
            throw Error(ErrorKind::ModelFormat, "denominator weights disagree with their softplus parameters");
        const double worst = theta[1] + std::min(0.0, omega[2]) + std::min(0.0, omega[3]);
        if (!(worst >= kDenominatorFloor))
            throw Error(ErrorKind::DenominatorUnderflow, "model denominator can fall below the floor");

        const auto& g = model_field(j, "group_models", "model");
        for (std::size_t i = 0; i < 4; ++i) {
            const std::string name(kAestheticNames[i]);
            const auto& gm = model_field(g, name.c_str(), "group_models");
            p.groups[i].weights = model_field(gm, "weights", name).get<std::vector<double>>();
            p.groups[i].bias = model_field(gm, "bias", name).get<double>();
            if (p.groups[i].weights.size() != feature_groups()[i].size())
                throw Error(ErrorKind::ModelFormat, name + ": wrong number of weights");
        }
        const auto& n = model_field(j, "normalizer", "model");
        p.normalizer.min = detail::array_from_json<double, 8>(model_field(n, "min", "normalizer"), "normalizer.min");
        p.normalizer.max = detail::array_from_json<double, 8>(model_field(n, "max", "normalizer"), "normalizer.max");
        p.normalizer.constant =
            detail::array_from_json<bool, 8>(model_field(n, "constant", "normalizer"), "normalizer.constant");
        for (std::size_t i = 0; i < kFeatureCount; ++i)
            if (!(p.normalizer.max[i] > p.normalizer.min[i]))
                throw Error(ErrorKind::ModelFormat, "normalizer max must exceed min");

        const auto& fc = model_field(j, "feature_config", "model");
        const auto& iv = model_field(fc, "interval", "feature_config");
        p.features.interval.alpha = detail::array_from_json<double, 12>(model_field(iv, "alpha", "interval"), "alpha");
        p.features.interval.theta_ih = model_field(iv, "theta_ih", "interval").get<double>();
        p.features.tension.lambda = detail::array_from_json<double, 6>(
            model_field(model_field(fc, "tension", "feature_config"), "lambda", "tension"), "lambda");
        const auto& sk = model_field(fc, "skewness", "feature_config");
        p.features.skewness = {model_field(sk, "beta1", "skewness").get<double>(),
                               model_field(sk, "beta2", "skewness").get<double>(),
                               model_field(sk, "theta_sk", "skewness").get<double>()};
        const auto& en = model_field(fc, "entropy", "feature_config");
        p.features.entropy = {model_field(en, "eta1", "entropy").get<double>(),
                              model_field(en, "eta2", "entropy").get<double>(),
                              model_field(en, "theta_e", "entropy").get<double>()};
        const auto& comp = model_field(j, "compressor", "model");
        p.features.compressor.algorithm = model_field(comp, "algorithm", "compressor").get<std::string>();
        p.features.compressor.level = model_field(comp, "level", "compressor").get<int>();
        const auto& tr = model_field(j, "training", "model");
        p.training.learning_rate = model_field(tr, "learning_rate", "training").get<double>();
        p.training.iterations = model_field(tr, "iterations", "training").get<std::size_t>();
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ModelFormat, std::string("malformed model document: ") + e.what());
    }
}

inline std::string serialize_model(const ModelParams& p) { return model_to_json(p).dump(2) + "\n"; }

inline void write_model(const std::filesystem::path& path, const ModelParams& p) {
    write_file_atomic(path, serialize_model(p));
}

inline ModelParams read_model(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::ModelFormat, path.string() + ": " + e.what());
    }
    return model_from_json(j);
}

}  // namespace birkhoff
