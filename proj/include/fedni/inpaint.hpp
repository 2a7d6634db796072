#ifndef FEDNI_INPAINT_HPP
#define FEDNI_INPAINT_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "fedni/graph.hpp"
#include "fedni/layers.hpp"
#include "fedni/masking.hpp"
#include "fedni/rng.hpp"
#include "fedni/tape.hpp"

namespace fedni {

/// Architecture of the missing-node generator. Defaults match the production
/// model; tests shrink every dimension.
struct GeneratorConfig {
    std::size_t d_in = 0;        // feature dimension D, set per dataset
    std::size_t enc_hidden = 256;
    std::size_t embed_dim = 64;
    std::size_t noise_dim = 4;
    std::size_t feat_h1 = 128;
    std::size_t feat_h2 = 256;
    std::size_t pheno_hidden = 32;
};

/// Missing-node generator: GCN encoder, neighbor-count head, noise-conditioned
/// feature head, and phenotype heads on top of the generated feature.
struct GeneratorState {
    GeneratorConfig cfg;
    std::vector<PhenotypeField> pheno_fields;

    GraphConvLayer enc1; // D -> enc_hidden, ELU
    GraphConvLayer enc2; // enc_hidden -> embed_dim, ELU
    LinearLayer count_head; // embed_dim -> 1, sigmoid applied in-graph
    LinearLayer feat1;      // embed_dim + noise_dim -> feat_h1
    BatchNormLayer bn1;
    LinearLayer feat2;      // feat_h1 -> feat_h2
    BatchNormLayer bn2;
    LinearLayer feat_out;   // feat_h2 -> D, tanh
    LinearLayer pheno_trunk;              // D -> pheno_hidden, ReLU
    std::vector<LinearLayer> pheno_heads; // per field: n_categories or 1 output

    // Local normalization of continuous phenotype targets (buffers, stay
    // client-side like BN running stats).
    std::vector<double> cont_mean, cont_std;

    GeneratorState(GeneratorConfig cfg, std::vector<PhenotypeField> fields, std::uint64_t seed);

    /// Fits cont_mean/cont_std from a local phenotype table.
    void fit_pheno_normalization(const PhenotypeTable& u);

    std::vector<ParamTensor*> params(); // stable order
};

/// SN-GAN discriminator: three spectrally normalized linear layers.
struct DiscriminatorState {
    std::size_t d_in = 0;
    SnLinearLayer l1; // D -> 128, ReLU
    SnLinearLayer l2; // 128 -> 32, ReLU
    SnLinearLayer l3; // 32 -> 1

    DiscriminatorState(std::size_t d_in, std::uint64_t seed,
                       std::size_t h1 = 128, std::size_t h2 = 32);

    /// One (or more) power iterations per layer, refreshing the cached sigma
    /// estimates used by forward().
    void refresh_spectral(std::size_t power_iters);

    /// Raw score per row; sigma estimates are constants during backward.
    Tape::Ref forward(Tape& t, Tape::Ref x, bool trainable = true);

    std::vector<ParamTensor*> params();
};

/// One forward pass of the generator on a corrupted graph. Holds the tape so
/// losses can be stacked on top.
struct GeneratorForward {
    Tape tape;
    Tape::Ref embeddings;  // n x embed_dim
    Tape::Ref counts;      // n x 1, sigmoid outputs
    std::vector<std::size_t> slot_parent; // per generated slot: retained row index
    Tape::Ref features;    // S x D tanh outputs; invalid when S == 0
    std::vector<Tape::Ref> pheno_outputs; // per field: S x n_categories logits, or S x 1
    Matrix noise;          // S x noise_dim
    bool has_slots() const { return !slot_parent.empty(); }
};

/// Training-mode forward: one feature slot per ground-truth hidden neighbor
/// (teacher forcing), fresh Gaussian noise per slot, batch-norm in training
/// mode.
GeneratorForward generator_forward(const MaskEpisode& ep, GeneratorState& gen, Rng& rng,
                                   bool trainable = true);

struct InpaintLossRefs {
    Tape::Ref l_num, l_rec, l_gen, l_pheno, l_fea, l_total;
};

struct InpaintLossValues {
    double l_num = 0, l_rec = 0, l_gen = 0, l_pheno = 0, l_fea = 0, l_dis = 0;
    bool empty_hidden = false;
    bool disc_updated = false;
};

/// All generator-side losses, stacked on fwd.tape with gradients intact.
/// Slot-to-target alignment is greedy nearest-neighbor in feature space
/// within each parent's group. When the episode hid nothing, l_rec, l_gen and
/// l_pheno are zero and `empty_hidden` is flagged in the returned values.
/// The discriminator participates with frozen weights (its parameters receive
/// no gradient).
InpaintLossRefs inpaint_losses(const MaskEpisode& ep, GeneratorForward& fwd, GeneratorState& gen,
                               DiscriminatorState& disc, double alpha, double beta,
                               bool use_discriminator, InpaintLossValues* values = nullptr);

/// L_dis on its own tape: real features against detached fakes; gradients
/// flow into the discriminator only.
struct DiscriminatorLoss {
    Tape tape;
    Tape::Ref l_dis;
    double value = 0;
};
DiscriminatorLoss discriminator_loss(const Matrix& real_feats, const Matrix& fake_feats,
                                     DiscriminatorState& disc);

struct InpaintTrainConfig {
    double alpha = 1.0;
    double beta = 1.0;
    double lr = 1e-3;
    double n_max = 5.0;
    double mask_target = 0.125;
    std::size_t disc_interval = 1;  // 0 disables discriminator updates entirely
    bool use_discriminator = true;
    bool random_masking = false;    // ablation: random_mask instead of mask_leaves
    std::size_t sn_train_iters = 1; // power iterations per training step
};

/// One local training step: sample an episode from a uniformly random root,
/// update the generator on L_num + L_fea + L_pheno, then (on the configured
/// interval) the discriminator on L_dis with a detached fake batch.
InpaintLossValues local_inpaint_train_step(const PopulationGraph& g, GeneratorState& gen,
                                           DiscriminatorState& disc,
                                           const InpaintTrainConfig& cfg, Rng& rng,
                                           std::size_t step_index);

/// A local graph augmented with generated nodes and reconstructed edges.
struct FusedGraph {
    PopulationGraph graph;
    std::size_t n_real = 0;
    std::vector<std::size_t> parent_of; // per generated node: real parent index
    bool nothing_generated = false;

    std::size_t n_generated() const { return graph.n() - n_real; }
};

struct MergeConfig {
    double n_max = 5.0;
    std::size_t k_prime = 1;
    bool use_edge_prediction = true; // false: only a unit-weight parent link per generated node
};

/// Inference on the original (uncorrupted) local graph: per real node,
/// generate round(count * n_max) nodes with features and phenotypes, project
/// them through the stored PCA basis and rebuild edges with the fused
/// similarity rule against the known (real) nodes: top-k' plus a mandatory
/// parent edge.
FusedGraph graph_merge(const PopulationGraph& g, GeneratorState& gen, const MergeConfig& cfg,
                       Rng& rng);

/// Mean/variance gap between two feature samples (rows = samples): squared
/// mean distance plus per-dimension standard-deviation gaps. Used to compare
/// generated against true hidden features.
double feature_distribution_distance(const Matrix& a, const Matrix& b);

} // namespace fedni

#endif
