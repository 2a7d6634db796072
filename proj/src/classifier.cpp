#include "fedni/classifier.hpp"

#include <algorithm>
#include <cmath>

#include "fedni/errors.hpp"

namespace fedni {

ClassifierState::ClassifierState(std::size_t d, std::uint64_t seed, std::size_t h1, std::size_t h2)
    : d_in(d) {
    if (d == 0) throw config_error("ClassifierState: d_in must be set");
    Rng rng(seed);
    g1 = GraphConvLayer("clf.g1", d, h1, Act::elu, rng);
    g2 = GraphConvLayer("clf.g2", h1, h2, Act::identity, rng);
    fc = LinearLayer("clf.fc", h2, 2, rng);
}

std::vector<ParamTensor*> ClassifierState::params() {
    std::vector<ParamTensor*> out;
    g1.collect(out);
    g2.collect(out);
    fc.collect(out);
    return out;
}

Tape::Ref classifier_forward(Tape& t, const PopulationGraph& g, ClassifierState& clf,
                             bool trainable) {
    if (g.feature_dim() != clf.d_in)
        throw dimension_error("classifier_forward: feature dim " + std::to_string(g.feature_dim()) +
                              " vs model " + std::to_string(clf.d_in));
    Tape::Ref x = t.constant(g.X);
    Tape::Ref a = t.constant(g.a_norm);
    Tape::Ref h = clf.g2.forward(t, a, clf.g1.forward(t, a, x, trainable), trainable);
    return t.softmax_rows(clf.fc.forward(t, h, trainable));
}

Matrix classifier_probs(const PopulationGraph& g, ClassifierState& clf) {
    Tape t;
    return t.value(classifier_forward(t, g, clf, /*trainable=*/false));
}

Tape::Ref ce_loss(Tape& t, Tape::Ref probs, const std::vector<int>& y,
                  const std::vector<std::uint8_t>& mask) {
    const Matrix& p = t.value(probs);
    if (p.cols() != 2) throw dimension_error("ce_loss: expected 2-class probabilities");
    if (y.size() != p.rows() || mask.size() != p.rows())
        throw dimension_error("ce_loss: label/mask size mismatch");
    std::size_t selected = 0;
    Matrix w_pos(p.rows(), 1), w_neg(p.rows(), 1);
    for (std::size_t i = 0; i < p.rows(); ++i) {
        if (!mask[i]) continue;
        ++selected;
        if (y[i] == 1)
            w_pos(i, 0) = 1.0;
        else
            w_neg(i, 0) = 1.0;
    }
    if (selected == 0) throw config_error("ce_loss: mask selects no labeled training nodes");

    Tape::Ref p1 = t.clip(t.slice_cols(probs, 1, 2), 1e-7, 1.0 - 1e-7);
    Tape::Ref log_p = t.log(p1);
    Tape::Ref log_q = t.log(t.affine(p1, -1.0, 1.0)); // log(1 - p)
    Tape::Ref acc = t.add(t.sum(t.mul_const(log_p, w_pos)), t.sum(t.mul_const(log_q, w_neg)));
    return t.affine(acc, -1.0, 0.0);
}

namespace {
std::vector<std::uint8_t> usable_mask(const PopulationGraph& g,
                                      const std::vector<std::uint8_t>& mask) {
    std::vector<std::uint8_t> m(mask.size(), 0);
    for (std::size_t i = 0; i < mask.size(); ++i)
        m[i] = mask[i] && g.labeled_mask[i] && g.provenance[i] == kNodeReal;
    return m;
}
} // namespace

double train_classifier_epoch(const PopulationGraph& g, ClassifierState& clf,
                              const std::vector<std::uint8_t>& train_mask, double lr) {
    Tape t;
    Tape::Ref probs = classifier_forward(t, g, clf, true);
    Tape::Ref loss = ce_loss(t, probs, g.y, usable_mask(g, train_mask));
    const double value = t.value(loss)(0, 0);
    t.backward(loss);
    adam_step(clf.params(), lr);
    return value;
}

double classifier_loss(const PopulationGraph& g, ClassifierState& clf,
                       const std::vector<std::uint8_t>& mask) {
    Tape t;
    Tape::Ref probs = classifier_forward(t, g, clf, false);
    return t.value(ce_loss(t, probs, g.y, usable_mask(g, mask)))(0, 0);
}

std::optional<double> rank_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (int v : labels) n_pos += (v == 1);
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // average ranks for ties (Mann-Whitney with tie correction)
    std::vector<double> rank(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg = 0.5 * double(i + 1 + j + 1);
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg;
        i = j + 1;
    }
    double r_pos = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        if (labels[k] == 1) r_pos += rank[k];
    const double u = r_pos - double(n_pos) * double(n_pos + 1) / 2.0;
    return u / (double(n_pos) * double(n_neg));
}

MetricsReport evaluate_metrics_pooled(const std::vector<double>& scores, const std::vector<int>& y) {
    if (scores.empty() || scores.size() != y.size())
        throw config_error("evaluate_metrics: empty or mismatched test set");
    MetricsReport r;
    r.n_test = scores.size();
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const int pred = scores[i] > 0.5 ? 1 : 0; // ties go to class 0
        if (pred == 1 && y[i] == 1) ++tp;
        else if (pred == 1 && y[i] == 0) ++fp;
        else if (pred == 0 && y[i] == 0) ++tn;
        else ++fn;
    }
    r.accuracy = double(tp + tn) / double(r.n_test);
    r.precision = (tp + fp) > 0 ? double(tp) / double(tp + fp) : 0.0;
    r.recall = (tp + fn) > 0 ? double(tp) / double(tp + fn) : 0.0;
    r.f1 = (r.precision + r.recall) > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    r.auc = rank_auc(scores, y);
    return r;
}

MetricsReport evaluate_metrics(const Matrix& probs, const std::vector<int>& y,
                               const std::vector<std::uint8_t>& test_mask) {
    if (probs.cols() != 2) throw dimension_error("evaluate_metrics: expected 2-class probabilities");
    if (y.size() != probs.rows() || test_mask.size() != probs.rows())
        throw dimension_error("evaluate_metrics: label/mask size mismatch");
    std::vector<double> scores;
    std::vector<int> labels;
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        if (!test_mask[i]) continue;
        scores.push_back(probs(i, 1));
        labels.push_back(y[i]);
    }
    return evaluate_metrics_pooled(scores, labels);
}

namespace {
void mean_std(const std::vector<double>& v, double& mean, double& stdev) {
    mean = 0.0;
    stdev = 0.0;
    if (v.empty()) return;
    for (double x : v) mean += x;
    mean /= double(v.size());
    if (v.size() < 2) return;
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    stdev = std::sqrt(acc / double(v.size() - 1));
}
} // namespace

MetricsSummary summarize_metrics(const std::vector<MetricsReport>& cells) {
    MetricsSummary s;
    s.n_cells = cells.size();
    std::vector<double> acc, auc, prec, rec, f1;
    for (const auto& c : cells) {
        acc.push_back(c.accuracy);
        prec.push_back(c.precision);
        rec.push_back(c.recall);
        f1.push_back(c.f1);
        if (c.auc)
            auc.push_back(*c.auc);
        else
            ++s.auc_excluded;
    }
    mean_std(acc, s.mean_accuracy, s.std_accuracy);
    mean_std(auc, s.mean_auc, s.std_auc);
    mean_std(prec, s.mean_precision, s.std_precision);
    mean_std(rec, s.mean_recall, s.std_recall);
    mean_std(f1, s.mean_f1, s.std_f1);
    return s;
}

} // namespace fedni
