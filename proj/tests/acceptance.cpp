// Acceptance runner: one PASS/FAIL line per criterion, non-zero exit when
// any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "birkhoff/complexity.hpp"
#include "birkhoff/corpus.hpp"
#include "birkhoff/evaluation.hpp"
#include "birkhoff/harmony.hpp"
#include "birkhoff/ingest.hpp"
#include "birkhoff/model.hpp"
#include "birkhoff/symmetry.hpp"
#include "test_support.hpp"

using namespace birkhoff;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::vector<std::string> notes;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            notes.push_back("FAILED " + what);
        }
    }
    void note(const std::string& what) { notes.push_back(what); }
};

std::string fmt(const char* f, auto... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

unsigned workers() { return std::max(1u, std::thread::hardware_concurrency()); }

// ---------------------------------------------------------------------------

Outcome formulas() {
    Outcome o;
    auto hist = [](std::vector<std::uint64_t> c) {
        Histogram<int> h;
        h.counts = c;
        for (std::size_t i = 0; i < c.size(); ++i) {
            h.bin_labels.push_back(static_cast<int>(i));
            h.total += c[i];
        }
        return h;
    };
    o.check(std::abs(shannon_entropy(hist(std::vector<std::uint64_t>(12, 1))) - 3.58496250072) <= 1e-9,
            "uniform-12 entropy");
    o.check(shannon_entropy(hist({5, 5})) == 1.0, "two-bin entropy");

    const std::vector<double> x = {1, 1, 1, 5};
    double mean = 2.0, m2 = 0, m3 = 0;
    for (double v : x) m2 += (v - mean) * (v - mean) / 4, m3 += std::pow(v - mean, 3) / 4;
    const double g = sample_skewness(x).value;
    o.check(std::abs(g - 1.1547) <= 1e-4 && std::abs(g - m3 / std::pow(m2, 1.5)) <= 1e-12, "skewness [1,1,1,5]");
    const std::vector<double> sym = {1, 2, 3};
    o.check(std::abs(sample_skewness(sym).value) <= 1e-15, "symmetric skewness");

    AestheticVector4 half;
    half.values = {0.5, 0.5, 0.5, 0.5};
    QuotientWeights w;
    w.theta2 = 0.0;
    o.check(birkhoff_measure(half, w) == 1.0, "quotient of equal terms");
    AestheticVector4 h1 = half;
    h1.values[0] = 1.0;
    o.check(birkhoff_measure(h1, w) == 1.5, "quotient with H = 1");
    o.check(birkhoff_measure(half, {1, 0, 0, 0, 0, 1}) == 0.5, "pass-through weights");
    bool underflow = false;
    try {
        AestheticVector4 z;
        z.values = {1, 1, 0, 0};
        birkhoff_measure(z, w);
    } catch (const Error& e) {
        underflow = e.kind() == ErrorKind::DenominatorUnderflow;
    }
    o.check(underflow, "denominator floor");
    o.check(sigmoid(0.0) == 0.5, "sigmoid(0)");
    return o;
}

double rel_err(double a, double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8}); }

Outcome gradients() {
    Outcome o;
    Rng rng(2024, 0, 0);
    const double h = 1e-6;
    double worst = 0;
    for (int point = 0; point < 10; ++point) {
        // group regressions of width 2, 3, 2, 1
        for (std::size_t g = 0; g < 4; ++g) {
            const std::size_t d = feature_groups()[g].size();
            Design x;
            std::vector<double> y;
            for (int r = 0; r < 20; ++r) {
                std::vector<double> row;
                for (std::size_t j = 0; j < d; ++j) row.push_back(rng.uniform());
                x.push_back(row);
                y.push_back(rng.chance(0.5) ? 1.0 : 0.0);
            }
            LogisticModel m;
            for (std::size_t j = 0; j < d; ++j) m.weights.push_back(rng.uniform() * 4 - 2);
            m.bias = rng.uniform() * 2 - 1;
            const auto grad = logistic_loss_gradient(m, x, y).gradient;
            for (std::size_t j = 0; j <= d; ++j) {
                auto up = m, dn = m;
                (j < d ? up.weights[j] : up.bias) += h;
                (j < d ? dn.weights[j] : dn.bias) -= h;
                const double num =
                    (logistic_loss_gradient(up, x, y).loss - logistic_loss_gradient(dn, x, y).loss) / (2 * h);
                worst = std::max(worst, rel_err(grad[j], num));
            }
        }
        std::vector<QuotientSample> data;
        for (int r = 0; r < 20; ++r) {
            QuotientSample s;
            for (double& v : s.a.values) v = rng.uniform();
            s.label = r % 2 ? Label::composer : Label::ai;
            data.push_back(s);
        }
        QuotientModel m;
        m.set_params({rng.uniform() * 4 - 2, rng.uniform() * 4 - 2, rng.uniform() * 2 - 1, rng.uniform() * 4 - 2,
                      rng.uniform() * 4 - 2, rng.uniform() * 4 - 2});
        const auto grad = quotient_loss_gradient(m, data).gradient;
        for (std::size_t k = 0; k < QuotientModel::kParamCount; ++k) {
            auto up = m.params(), dn = m.params();
            up[k] += h;
            dn[k] -= h;
            QuotientModel mu = m, md = m;
            mu.set_params(up);
            md.set_params(dn);
            worst = std::max(worst, rel_err(grad[k], (quotient_loss(mu, data) - quotient_loss(md, data)) / (2 * h)));
        }
    }
    o.note(fmt("max relative error %.2e", worst));
    o.check(worst < 1e-6, "finite-difference agreement");
    return o;
}

Outcome auc_oracle() {
    Outcome o;
    Rng rng(77, 0, 0);
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::pair<Label, double>> s;
        for (int i = 0; i < 50; ++i)
            s.emplace_back(rng.chance(0.5) ? Label::composer : Label::ai,
                           rng.chance(0.3) ? static_cast<double>(rng.below(5)) : rng.uniform());
        s[0].first = Label::composer;
        s[1].first = Label::ai;
        double wins = 0, pairs = 0;
        for (const auto& [lp, sp] : s)
            for (const auto& [ln, sn] : s)
                if (lp == Label::composer && ln == Label::ai) {
                    pairs += 1;
                    wins += sp > sn ? 1.0 : sp == sn ? 0.5 : 0.0;
                }
        worst = std::max(worst, std::abs(roc_auc(s).auc - wins / pairs));
    }
    o.note(fmt("max |trapezoid - Mann-Whitney| = %.1e", worst));
    o.check(worst <= 1e-12, "AUC equals Mann-Whitney");
    return o;
}

Outcome invariances() {
    Outcome o;
    constexpr int kScores = 100;
    double cph = 0, ssf = 0, skew = 0;
    bool ssm_sym = true, decision = true;

    std::vector<Score> scores;
    for (int seed = 0; seed < kScores; ++seed) scores.push_back(birkhoff::testing::random_score(1000 + seed));
    const auto feats = extract_all(scores, {}, workers());
    const auto norm = fit_normalizer(feats);
    Rng rng(4, 0, 0);
    GroupModels lrs;
    for (std::size_t g = 0; g < 4; ++g) {
        for (std::size_t j = 0; j < feature_groups()[g].size(); ++j) lrs[g].weights.push_back(rng.uniform() * 6 - 3);
        lrs[g].bias = rng.uniform() * 2 - 1;
    }
    const QuotientWeights w{1.3, 0.7, 0.9, 1.1, -0.8, 0.4};

    for (int i = 0; i < kScores; ++i) {
        const auto& s = scores[i];
        for (int k : {-5, 3, 7}) {
            const auto t = birkhoff::testing::transpose(s, k);
            cph = std::max(cph, std::abs(chord_progression_harmony(t, {}) - chord_progression_harmony(s, {})));
            ssf = std::max(ssf, std::abs(self_similarity_fitness(t) - self_similarity_fitness(s)));
        }
        std::vector<double> pitches;
        for (const auto& n : s.notes) pitches.push_back(n.pitch.midi);
        for (double a : {-2.5, 0.5, 3.0}) {
            std::vector<double> y;
            for (double p : pitches) y.push_back(a * p + 11.0);
            skew = std::max(skew, std::abs(std::abs(sample_skewness(y).value) - std::abs(sample_skewness(pitches).value)));
        }
        const auto m = build_ssm(chroma_sequence(s));
        for (std::size_t r = 0; r < m.n; ++r)
            for (std::size_t c = 0; c < r; ++c) ssm_sym = ssm_sym && m(r, c) == m(c, r);

        const auto a = aesthetic_vector(norm.transform(feats[i]), lrs);
        const bool base = birkhoff_measure(a, w) >= 0;
        for (double c : {0.05, 0.37, 2.0, 1e3}) {
            const QuotientWeights cw{c * w.omega1, c * w.omega2, c * w.omega3, c * w.omega4, c * w.theta1, c * w.theta2};
            decision = decision && (birkhoff_measure(a, cw) >= 0) == base;
        }
    }
    o.note(fmt("max drift: CPH %.1e, SSF %.1e, |skew| %.1e", cph, ssf, skew));
    o.check(cph <= 1e-9, "CPH transposition invariance");
    o.check(ssf <= 1e-9, "SSF transposition invariance");
    o.check(skew <= 1e-9, "|skewness| affine invariance");
    o.check(ssm_sym, "SSM symmetry");
    o.check(decision, "decision invariant under positive scaling");
    return o;
}

// ---------------------------------------------------------------------------
// Seed-42 experiment shared by criteria 5 to 7 and 9

struct Experiment {
    std::vector<Score> corpus;
    std::vector<FeatureVector8> features;  // corpus order
    std::string model_file;
    EvalReport report;
    std::string metrics, roc, hist, ablation;
    double seconds_main = 0, seconds_ablation = 0;
};

Experiment run_experiment() {
    Experiment e;
    const auto t0 = Clock::now();
    GenConfig gen;  // seed 42, 100 pairs
    e.corpus = generate_corpus(gen, workers());
    const auto split = split_dataset(e.corpus, 0.7, 42);
    const auto model = train_pipeline(split.train, {}, {0.01, 1000}, workers());
    e.model_file = serialize_model(model);
    e.report = evaluate(model, split.test, workers());
    e.metrics = metrics_text(e.report);
    e.roc = roc_csv(e.report.roc);
    e.hist = measure_hist_csv(measure_histogram(e.report.samples));
    e.seconds_main = std::chrono::duration<double>(Clock::now() - t0).count();

    const auto t1 = Clock::now();
    AblationConfig ab;
    ab.jobs = workers();
    e.report.ablation = run_ablation(e.corpus, ab);
    e.ablation = ablation_csv(e.report.ablation);
    e.seconds_ablation = std::chrono::duration<double>(Clock::now() - t1).count();
    e.features = extract_all(e.corpus, {}, workers());
    return e;
}

Outcome end_to_end(const Experiment& e) {
    Outcome o;
    const auto& m = e.report.metrics;
    o.note(fmt("tp=%zu fp=%zu tn=%zu fn=%zu precision=%.4f recall=%.4f f1=%.4f auc=%.4f (%.1f s)", m.counts.tp,
               m.counts.fp, m.counts.tn, m.counts.fn, m.precision, m.recall, m.f1, e.report.roc.auc, e.seconds_main));
    o.check(e.report.samples.size() == 60, "60 test scores");
    o.check(m.precision >= 0.90, "precision >= 0.90");
    o.check(e.report.roc.auc >= 0.90, "AUC >= 0.90");
    o.check(e.seconds_main < 300, "runtime < 5 min");
    return o;
}

Outcome directions(const Experiment& e) {
    Outcome o;
    std::array<double, kFeatureCount> comp{}, ai{};
    std::size_t nc = 0, na = 0;
    for (std::size_t i = 0; i < e.corpus.size(); ++i) {
        const bool c = e.corpus[i].label == Label::composer;
        (c ? nc : na) += 1;
        for (std::size_t k = 0; k < kFeatureCount; ++k) (c ? comp : ai)[k] += e.features[i].values[k];
    }
    std::string line;
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
        comp[k] /= static_cast<double>(nc);
        ai[k] /= static_cast<double>(na);
        line += fmt("%s %.3f/%.3f ", std::string(kFeatureNames[k]).c_str(), comp[k], ai[k]);
    }
    o.note("composer/ai means: " + line);
    for (auto f : {Feature::IH, Feature::CPH, Feature::SSF, Feature::PHE, Feature::RHE, Feature::KC}) {
        const auto k = static_cast<std::size_t>(f);
        o.check(comp[k] > ai[k], std::string(kFeatureNames[k]) + " composer > ai");
    }
    const auto rs = static_cast<std::size_t>(Feature::RS);
    o.check(ai[rs] > comp[rs], "RS ai > composer");
    return o;
}

Outcome ablation_order(const Experiment& e) {
    Outcome o;
    const auto& a = e.report.ablation;
    std::string line;
    for (const auto& x : a) line += fmt("%s=%.4f ", x.model.c_str(), x.auc);
    o.note(line + fmt("(%.1f s)", e.seconds_ablation));
    for (std::size_t k = 1; k < a.size(); ++k) o.check(a[0].auc >= a[k].auc, "full >= " + a[k].model);
    o.check(a[1].auc <= a[2].auc, "no_harmony <= no_symmetry");
    o.check(e.seconds_ablation < 1200, "runtime < 20 min");
    return o;
}

Outcome robustness(const Experiment& e) {
    Outcome o;
    Rng rng(8, 0, 0);
    std::size_t typed = 0, parsed = 0;
    double slowest = 0;
    for (int i = 0; i < 1000; ++i) {
        auto bytes = encode_smf(e.corpus[rng.below(e.corpus.size())]);
        const int edits = rng.between(1, 8);
        for (int k = 0; k < edits; ++k) {
            switch (rng.below(4)) {
            case 0: bytes[rng.below(bytes.size())] = static_cast<std::uint8_t>(rng.below(256)); break;
            case 1: bytes[rng.below(bytes.size())] ^= static_cast<std::uint8_t>(1u << rng.below(8)); break;
            case 2: bytes.resize(rng.below(bytes.size()) + 1); break;
            default:
                bytes.insert(bytes.begin() + static_cast<std::ptrdiff_t>(rng.below(bytes.size())),
                             static_cast<std::uint8_t>(rng.below(256)));
            }
        }
        const auto t0 = Clock::now();
        try {
            parse_smf(bytes);
            ++parsed;
        } catch (const Error&) {
            ++typed;
        } catch (const std::exception& ex) {
            o.check(false, std::string("untyped exception: ") + ex.what());
        }
        slowest = std::max(slowest, std::chrono::duration<double>(Clock::now() - t0).count());
    }
    o.note(fmt("1000 mutants: %zu typed errors, %zu parsed, slowest %.3f s", typed, parsed, slowest));
    o.check(typed + parsed == 1000, "every mutant handled");
    o.check(slowest < 5.0, "no file takes 5 s");

    bool text = true, smf = true, zip = true;
    for (const auto& s : e.corpus) {
        const auto doc = serialize_score_text(s);
        text = text && serialize_score_text(parse_score_text(doc).score) == doc;
        const auto back = parse_smf(encode_smf(s)).score;
        smf = smf && back.notes == s.notes && back.key == s.key;
        const auto bytes = canonical_serialize(s);
        zip = zip && decompress(compress(bytes)) == bytes;
    }
    o.check(text, "score text round-trip");
    o.check(smf, "SMF round-trip");
    o.check(zip, "compressor round-trip");
    return o;
}

Outcome determinism(const Experiment& a, const Experiment& b) {
    Outcome o;
    o.check(a.model_file == b.model_file, "model file");
    o.check(a.metrics == b.metrics, "metrics.txt");
    o.check(a.roc == b.roc, "roc.csv");
    o.check(a.hist == b.hist, "measure_hist.csv");
    o.check(a.ablation == b.ablation, "ablation.csv");
    return o;
}

int report(int n, const char* title, const std::function<Outcome()>& fn, double limit_s = 0) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
        o = fn();
    } catch (const std::exception& e) {
        o.check(false, std::string("exception: ") + e.what());
    }
    const double s = std::chrono::duration<double>(Clock::now() - t0).count();
    if (limit_s > 0) o.check(s < limit_s, fmt("runtime %.2f s < %.0f s", s, limit_s));
    std::printf("[%s] criterion %d: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", n, title, s);
    for (const auto& note : o.notes) std::printf("         %s\n", note.c_str());
    std::fflush(stdout);
    return o.pass ? 0 : 1;
}

}  // namespace

int main() {
    int failures = 0;
    failures += report(1, "formula unit suite", formulas, 1.0);
    failures += report(2, "gradient correctness", gradients, 5.0);
    failures += report(3, "AUC oracle equivalence", auc_oracle, 10.0);
    failures += report(4, "invariance suite", invariances);

    Experiment first, second;
    bool ran = true;
    try {
        first = run_experiment();
    } catch (const std::exception& e) {
        std::printf("experiment failed: %s\n", e.what());
        ran = false;
    }
    auto need = [&](auto fn) {
        return [&, fn] { return ran ? fn() : Outcome{false, {"experiment did not run"}}; };
    };
    failures += report(5, "seed-42 end-to-end", need([&] { return end_to_end(first); }));
    failures += report(6, "feature directions", need([&] { return directions(first); }));
    failures += report(7, "ablation ordering", need([&] { return ablation_order(first); }));
    failures += report(8, "robustness", need([&] { return robustness(first); }));
    failures += report(9, "determinism", need([&] {
        second = run_experiment();
        return determinism(first, second);
    }));
    std::printf("%d of 9 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
