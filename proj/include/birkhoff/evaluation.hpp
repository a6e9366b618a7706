// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "birkhoff/corpus.hpp"
#include "birkhoff/io.hpp"
#include "birkhoff/model.hpp"

namespace birkhoff {

// ---------------------------------------------------------------------------
// Classification metrics (composer is the positive class)

struct ConfusionCounts {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

    std::size_t total() const noexcept { return tp + fp + tn + fn; }
    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// 0/0 ratios are reported as 0 and flagged.
struct PrecisionRecallF1 {
    ConfusionCounts counts;
    double precision = 0.0, recall = 0.0, f1 = 0.0;
    bool precision_undefined = false, recall_undefined = false, f1_undefined = false;
};

inline PrecisionRecallF1 precision_recall_f1(const ConfusionCounts& c) {
    PrecisionRecallF1 r;
    r.counts = c;
    if (c.tp + c.fp == 0) r.precision_undefined = true;
    else r.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    if (c.tp + c.fn == 0) r.recall_undefined = true;
    else r.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (r.precision + r.recall == 0.0) r.f1_undefined = true;
    else r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
    return r;
}

/// Pairs are (true label, predicted label).
inline PrecisionRecallF1 precision_recall_f1(std::span<const std::pair<Label, Label>> predictions) {
    if (predictions.empty()) throw Error(ErrorKind::InvalidArgument, "no predictions to score");
    ConfusionCounts c;
    for (auto [truth, guess] : predictions) {
        const bool pos = truth == Label::composer, hit = guess == Label::composer;
        if (pos && hit) ++c.tp;
        else if (!pos && hit) ++c.fp;
        else if (pos) ++c.fn;
        else ++c.tn;
    }
    return precision_recall_f1(c);
}

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = 0.0;  // predict composer iff score >= threshold
};

struct RocResult {
    std::vector<RocPoint> points;
    double auc = 0.0;
};

/// Pairs are (true label, score). One point per distinct score plus the
/// (0, 0, +inf) and (1, 1, -inf) endpoints. The trapezoid area is
/// accumulated in integer units of 1/(2PN), so it equals the Mann-Whitney
/// statistic with ties counted as one half.
inline RocResult roc_auc(std::span<const std::pair<Label, double>> scored) {
    std::vector<std::pair<double, bool>> s;
    s.reserve(scored.size());
    std::uint64_t pos = 0, neg = 0;
    for (auto [label, score] : scored) {
        if (std::isnan(score)) throw Error(ErrorKind::InvalidArgument, "NaN score");
        const bool p = label == Label::composer;
        (p ? pos : neg) += 1;
        s.emplace_back(score, p);
    }
    if (pos == 0 || neg == 0) throw Error(ErrorKind::SingleClassEval, "ROC needs both labels");
    std::sort(s.begin(), s.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

    RocResult r;
    constexpr double inf = std::numeric_limits<double>::infinity();
    r.points.push_back({0.0, 0.0, inf});
    std::uint64_t tp = 0, fp = 0, twice_area = 0;
    for (std::size_t i = 0; i < s.size();) {
        const double t = s[i].first;
        const std::uint64_t tp0 = tp, fp0 = fp;
        for (; i < s.size() && s[i].first == t; ++i) (s[i].second ? tp : fp) += 1;
        twice_area += (fp - fp0) * (tp + tp0);
        r.points.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                            static_cast<double>(tp) / static_cast<double>(pos), t});
    }
    r.points.push_back({1.0, 1.0, -inf});
    r.auc = static_cast<double>(twice_area) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
    return r;
}

// ---------------------------------------------------------------------------
// Evaluation of a trained model

struct ScoredSample {
    std::string id;
    Label label = Label::ai;
    Prediction prediction;
};

struct AblationEntry {
    std::string model;
    double auc = 0.0;
};

struct EvalReport {
    PrecisionRecallF1 metrics;
    RocResult roc;
    std::vector<ScoredSample> samples;
    std::vector<AblationEntry> ablation;  // empty unless an ablation ran
};

inline EvalReport evaluate_features(const ModelParams& model, std::span<const FeatureVector8> features,
                                    std::span<const Label> labels, std::span<const std::string> ids = {}) {
    if (features.size() != labels.size()) throw Error(ErrorKind::InvalidArgument, "features/labels size mismatch");
    EvalReport r;
    std::vector<std::pair<Label, Label>> decisions;
    std::vector<std::pair<Label, double>> scored;
    for (std::size_t i = 0; i < features.size(); ++i) {
        auto p = predict_features(features[i], model);
        decisions.emplace_back(labels[i], p.label);
        scored.emplace_back(labels[i], p.probability);
        r.samples.push_back({i < ids.size() ? ids[i] : std::string{}, labels[i], std::move(p)});
    }
    r.metrics = precision_recall_f1(decisions);
    r.roc = roc_auc(scored);
    return r;
}

inline EvalReport evaluate(const ModelParams& model, std::span<const Score> test, unsigned jobs = 1) {
    std::vector<Label> labels;
    std::vector<std::string> ids;
    for (const auto& s : test) {
        if (!s.label) throw Error(ErrorKind::SchemaError, "evaluation score '" + s.id + "' has no label");
        labels.push_back(*s.label);
        ids.push_back(s.id);
    }
    const auto feats = extract_all(test, model.features, jobs);
    return evaluate_features(model, feats, labels, ids);
}

// ---------------------------------------------------------------------------
// Ablation

inline constexpr std::array<std::string_view, 5> kAblationModels = {"full", "no_harmony", "no_symmetry", "no_entropy",
                                                                    "no_k_complexity"};

/// Active quotient terms for each entry of kAblationModels.
inline std::array<bool, 4> ablation_mask(std::size_t entry) {
    std::array<bool, 4> m{true, true, true, true};
    if (entry > 0) m[entry - 1] = false;
    return m;
}

struct AblationConfig {
    double split_ratio = 0.7;
    std::uint64_t split_seed = 42;
    FeatureConfig features{};
    TrainingConfig training{};
    unsigned jobs = 1;
};

/// Trains the full model and the four single-term ablations on the same
/// features and returns their test AUCs in kAblationModels order. The
/// normalizer and group regressions do not depend on the mask, so every
/// entry shares them; only the quotient is retrained.
inline std::vector<AblationEntry> run_ablation(std::span<const FeatureVector8> train_x, std::span<const Label> train_y,
                                               std::span<const FeatureVector8> test_x, std::span<const Label> test_y,
                                               const AblationConfig& cfg = {}) {
    std::vector<AblationEntry> out(kAblationModels.size());
    std::vector<std::exception_ptr> errors(kAblationModels.size());
    auto work = [&](std::size_t k) {
        try {
            const auto model = train_on_features(train_x, train_y, cfg.features, cfg.training, ablation_mask(k));
            out[k] = {std::string(kAblationModels[k]), evaluate_features(model, test_x, test_y).roc.auc};
        } catch (...) {
            errors[k] = std::current_exception();
        }
    };
    const unsigned jobs = std::max(1u, std::min<unsigned>(cfg.jobs, static_cast<unsigned>(kAblationModels.size())));
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < jobs; ++w)
            pool.emplace_back([&, w] {
                for (std::size_t k = w; k < kAblationModels.size(); k += jobs) work(k);
            });
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

inline std::vector<AblationEntry> run_ablation(const std::vector<Score>& corpus, const AblationConfig& cfg = {}) {
    const auto split = split_dataset(corpus, cfg.split_ratio, cfg.split_seed);
    auto labels_of = [](const std::vector<Score>& v) {
        std::vector<Label> y;
        for (const auto& s : v) {
            if (!s.label) throw Error(ErrorKind::SchemaError, "score '" + s.id + "' has no label");
            y.push_back(*s.label);
        }
        return y;
    };
    const auto train_y = labels_of(split.train), test_y = labels_of(split.test);
    const auto train_x = extract_all(split.train, cfg.features, cfg.jobs);
    const auto test_x = extract_all(split.test, cfg.features, cfg.jobs);
    return run_ablation(train_x, train_y, test_x, test_y, cfg);
}

// ---------------------------------------------------------------------------
// Report files

/// Shared bin edges over the observed measure range, so the two classes can
/// be overlaid directly. The last bin is closed on the right.
struct MeasureHistogram {
    std::vector<double> edges;  // bins + 1
    std::vector<std::size_t> composer;
    std::vector<std::size_t> ai;
};

inline MeasureHistogram measure_histogram(std::span<const ScoredSample> samples, std::size_t bins = 20) {
    MeasureHistogram h;
    h.composer.assign(bins, 0);
    h.ai.assign(bins, 0);
    if (samples.empty() || bins == 0) return h;
    double lo = samples.front().prediction.measure, hi = lo;
    for (const auto& s : samples) {
        lo = std::min(lo, s.prediction.measure);
        hi = std::max(hi, s.prediction.measure);
    }
    if (!(hi > lo)) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double width = (hi - lo) / static_cast<double>(bins);
    for (std::size_t b = 0; b <= bins; ++b) h.edges.push_back(b == bins ? hi : lo + width * static_cast<double>(b));
    for (const auto& s : samples) {
        auto b = static_cast<std::size_t>((s.prediction.measure - lo) / width);
        b = std::min(b, bins - 1);
        (s.label == Label::composer ? h.composer : h.ai)[b] += 1;
    }
    return h;
}

namespace detail {

inline std::string fixed4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

inline std::string exact(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

inline std::string metrics_text(const EvalReport& r) {
    const auto& m = r.metrics;
    std::string s;
    s += "tp=" + std::to_string(m.counts.tp) + "\n";
    s += "fp=" + std::to_string(m.counts.fp) + "\n";
    s += "tn=" + std::to_string(m.counts.tn) + "\n";
    s += "fn=" + std::to_string(m.counts.fn) + "\n";
    s += "precision=" + detail::fixed4(m.precision) + (m.precision_undefined ? " undefined" : "") + "\n";
    s += "recall=" + detail::fixed4(m.recall) + (m.recall_undefined ? " undefined" : "") + "\n";
    s += "f1=" + detail::fixed4(m.f1) + (m.f1_undefined ? " undefined" : "") + "\n";
    s += "auc=" + detail::fixed4(r.roc.auc) + "\n";
    return s;
}

inline std::string roc_csv(const RocResult& roc) {
    std::string s = "fpr,tpr,threshold\n";
    for (const auto& p : roc.points)
        s += detail::exact(p.fpr) + "," + detail::exact(p.tpr) + "," + detail::exact(p.threshold) + "\n";
    return s;
}

inline std::string measure_hist_csv(const MeasureHistogram& h) {
    std::string s = "bin_lo,bin_hi,composer,ai\n";
    for (std::size_t b = 0; b < h.composer.size(); ++b)
        s += detail::exact(h.edges[b]) + "," + detail::exact(h.edges[b + 1]) + "," + std::to_string(h.composer[b]) +
             "," + std::to_string(h.ai[b]) + "\n";
    return s;
}

inline std::string ablation_csv(std::span<const AblationEntry> entries) {
    std::string s = "model,auc\n";
    for (const auto& e : entries) s += e.model + "," + detail::fixed4(e.auc) + "\n";
    return s;
}

/// Writes metrics.txt, roc.csv and measure_hist.csv when the report has
/// samples, and ablation.csv when it has ablation entries. Returns the paths.
inline std::vector<std::filesystem::path> emit_report(const EvalReport& r, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::IoError, "cannot create " + dir.string() + ": " + ec.message());
    std::vector<std::filesystem::path> written;
    auto put = [&](const char* name, const std::string& text) {
        write_file_atomic(dir / name, text);
        written.push_back(dir / name);
    };
    if (!r.samples.empty()) {
        put("metrics.txt", metrics_text(r));
        put("roc.csv", roc_csv(r.roc));
        put("measure_hist.csv", measure_hist_csv(measure_histogram(r.samples)));
    }
    if (!r.ablation.empty()) put("ablation.csv", ablation_csv(r.ablation));
    return written;
}

}  // namespace birkhoff
