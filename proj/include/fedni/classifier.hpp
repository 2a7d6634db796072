#ifndef FEDNI_CLASSIFIER_HPP
#define FEDNI_CLASSIFIER_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fedni/graph.hpp"
#include "fedni/layers.hpp"
#include "fedni/tape.hpp"

namespace fedni {

/// Two-class GCN node classifier: G-conv D->64 ELU, G-conv 64->32, FC 32->2.
struct ClassifierState {
    std::size_t d_in = 0;
    GraphConvLayer g1;
    GraphConvLayer g2;
    LinearLayer fc;

    ClassifierState(std::size_t d_in, std::uint64_t seed, std::size_t h1 = 64, std::size_t h2 = 32);
    std::vector<ParamTensor*> params();
};

/// Softmax class probabilities for every node (real and generated alike).
Tape::Ref classifier_forward(Tape& t, const PopulationGraph& g, ClassifierState& clf,
                             bool trainable = true);

/// Plain evaluation convenience: n x 2 probability matrix, no gradients.
Matrix classifier_probs(const PopulationGraph& g, ClassifierState& clf);

/// Binary cross-entropy -sum[y log p + (1-y) log(1-p)] over the masked nodes,
/// with p the class-1 probability clipped to [1e-7, 1-1e-7]. The mask must
/// select at least one node.
Tape::Ref ce_loss(Tape& t, Tape::Ref probs, const std::vector<int>& y,
                  const std::vector<std::uint8_t>& mask);

/// One full-batch Adam epoch; returns the loss before the update.
double train_classifier_epoch(const PopulationGraph& g, ClassifierState& clf,
                              const std::vector<std::uint8_t>& train_mask, double lr);

/// Loss of the current weights without updating them.
double classifier_loss(const PopulationGraph& g, ClassifierState& clf,
                       const std::vector<std::uint8_t>& mask);

struct MetricsReport {
    double accuracy = 0;
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    std::optional<double> auc; // absent when the test set is single-class
    std::size_t n_test = 0;
};

/// Threshold-0.5 hard metrics (ties predict class 0; positive class is 1) and
/// Mann-Whitney AUC with ties contributing 1/2. The mask must select real
/// labeled nodes only.
MetricsReport evaluate_metrics(const Matrix& probs, const std::vector<int>& y,
                               const std::vector<std::uint8_t>& test_mask);

/// Pooled variant over explicit (score, label) pairs, used when test nodes
/// come from several client graphs.
MetricsReport evaluate_metrics_pooled(const std::vector<double>& scores, const std::vector<int>& y);

/// Mann-Whitney AUC of class-1 scores; nullopt for single-class input.
std::optional<double> rank_auc(const std::vector<double>& scores, const std::vector<int>& labels);

struct MetricsSummary {
    double mean_accuracy = 0, std_accuracy = 0;
    double mean_auc = 0, std_auc = 0;
    double mean_precision = 0, std_precision = 0;
    double mean_recall = 0, std_recall = 0;
    double mean_f1 = 0, std_f1 = 0;
    std::size_t n_cells = 0;
    std::size_t auc_excluded = 0; // cells whose AUC was undefined
};

/// Mean and sample standard deviation across folds/repeats. Cells without a
/// defined AUC are excluded from the AUC aggregate only.
MetricsSummary summarize_metrics(const std::vector<MetricsReport>& cells);

} // namespace fedni

#endif
