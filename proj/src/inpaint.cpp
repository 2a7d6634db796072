#include "fedni/inpaint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fedni/errors.hpp"
#include "fedni/graphcons.hpp"

namespace fedni {

namespace {
constexpr double kProbClip = 1e-7;
} // namespace

GeneratorState::GeneratorState(GeneratorConfig cfg_, std::vector<PhenotypeField> fields,
                               std::uint64_t seed)
    : cfg(cfg_), pheno_fields(std::move(fields)) {
    if (cfg.d_in == 0) throw config_error("GeneratorState: d_in must be set");
    Rng rng(seed);
    enc1 = GraphConvLayer("gen.enc1", cfg.d_in, cfg.enc_hidden, Act::elu, rng);
    enc2 = GraphConvLayer("gen.enc2", cfg.enc_hidden, cfg.embed_dim, Act::elu, rng);
    count_head = LinearLayer("gen.count", cfg.embed_dim, 1, rng);
    feat1 = LinearLayer("gen.feat1", cfg.embed_dim + cfg.noise_dim, cfg.feat_h1, rng);
    bn1 = BatchNormLayer("gen.bn1", cfg.feat_h1);
    feat2 = LinearLayer("gen.feat2", cfg.feat_h1, cfg.feat_h2, rng);
    bn2 = BatchNormLayer("gen.bn2", cfg.feat_h2);
    feat_out = LinearLayer("gen.feat_out", cfg.feat_h2, cfg.d_in, rng);
    pheno_trunk = LinearLayer("gen.pheno_trunk", cfg.d_in, cfg.pheno_hidden, rng);
    pheno_heads.reserve(pheno_fields.size());
    cont_mean.assign(pheno_fields.size(), 0.0);
    cont_std.assign(pheno_fields.size(), 1.0);
    for (std::size_t q = 0; q < pheno_fields.size(); ++q) {
        const auto& f = pheno_fields[q];
        const std::size_t out = f.kind == PhenoKind::categorical ? f.n_categories : 1;
        if (f.kind == PhenoKind::categorical && f.n_categories < 2)
            throw schema_error("GeneratorState: categorical field '" + f.name + "' needs >= 2 categories");
        pheno_heads.emplace_back("gen.pheno." + f.name, cfg.pheno_hidden, out, rng);
    }
}

void GeneratorState::fit_pheno_normalization(const PhenotypeTable& u) {
    if (u.n_fields() != pheno_fields.size())
        throw schema_error("fit_pheno_normalization: field count mismatch");
    for (std::size_t q = 0; q < pheno_fields.size(); ++q) {
        if (pheno_fields[q].kind != PhenoKind::continuous) continue;
        double mean = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) mean += u.values(i, q);
        mean /= double(u.size());
        double var = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double d = u.values(i, q) - mean;
            var += d * d;
        }
        var /= double(u.size());
        cont_mean[q] = mean;
        cont_std[q] = var > 1e-12 ? std::sqrt(var) : 1.0;
    }
}

std::vector<ParamTensor*> GeneratorState::params() {
    std::vector<ParamTensor*> out;
    enc1.collect(out);
    enc2.collect(out);
    count_head.collect(out);
    feat1.collect(out);
    bn1.collect(out);
    feat2.collect(out);
    bn2.collect(out);
    feat_out.collect(out);
    pheno_trunk.collect(out);
    for (auto& h : pheno_heads) h.collect(out);
    return out;
}

DiscriminatorState::DiscriminatorState(std::size_t d, std::uint64_t seed, std::size_t h1,
                                       std::size_t h2)
    : d_in(d) {
    if (d == 0) throw config_error("DiscriminatorState: d_in must be set");
    Rng rng(seed);
    l1 = SnLinearLayer("disc.l1", d, h1, rng);
    l2 = SnLinearLayer("disc.l2", h1, h2, rng);
    l3 = SnLinearLayer("disc.l3", h2, 1, rng);
}

void DiscriminatorState::refresh_spectral(std::size_t power_iters) {
    l1.refresh(power_iters);
    l2.refresh(power_iters);
    l3.refresh(power_iters);
}

Tape::Ref DiscriminatorState::forward(Tape& t, Tape::Ref x, bool trainable) {
    Tape::Ref h = t.activation(l1.forward(t, x, trainable), Act::relu);
    h = t.activation(l2.forward(t, h, trainable), Act::relu);
    return l3.forward(t, h, trainable);
}

std::vector<ParamTensor*> DiscriminatorState::params() {
    std::vector<ParamTensor*> out;
    l1.collect(out);
    l2.collect(out);
    l3.collect(out);
    return out;
}

GeneratorForward generator_forward(const MaskEpisode& ep, GeneratorState& gen, Rng& rng,
                                   bool trainable) {
    GeneratorForward fwd;
    Tape& t = fwd.tape;
    const PopulationGraph& cg = ep.corrupted;
    if (cg.feature_dim() != gen.cfg.d_in)
        throw dimension_error("generator_forward: feature dim " + std::to_string(cg.feature_dim()) +
                              " vs model " + std::to_string(gen.cfg.d_in));

    Tape::Ref x = t.constant(cg.X);
    Tape::Ref a = t.constant(cg.a_norm);
    fwd.embeddings = gen.enc2.forward(t, a, gen.enc1.forward(t, a, x, trainable), trainable);
    fwd.counts = t.activation(gen.count_head.forward(t, fwd.embeddings, trainable), Act::sigmoid);

    for (std::size_t r = 0; r < ep.hidden_neighbors.size(); ++r)
        for (std::size_t s = 0; s < ep.hidden_neighbors[r].size(); ++s) fwd.slot_parent.push_back(r);

    const std::size_t n_slots = fwd.slot_parent.size();
    if (n_slots == 0) return fwd;

    fwd.noise = Matrix(n_slots, gen.cfg.noise_dim);
    for (auto& v : fwd.noise.raw()) v = rng.normal();

    Tape::Ref z_slots = t.gather_rows(fwd.embeddings, fwd.slot_parent);
    Tape::Ref with_noise = t.concat_cols(z_slots, t.constant(fwd.noise));
    Tape::Ref h1 = gen.bn1.forward(t, t.activation(gen.feat1.forward(t, with_noise, trainable), Act::relu),
                                   /*training=*/trainable, trainable);
    Tape::Ref h2 = gen.bn2.forward(t, t.activation(gen.feat2.forward(t, h1, trainable), Act::relu),
                                   /*training=*/trainable, trainable);
    fwd.features = t.activation(gen.feat_out.forward(t, h2, trainable), Act::tanh);

    Tape::Ref trunk = t.activation(gen.pheno_trunk.forward(t, fwd.features, trainable), Act::relu);
    fwd.pheno_outputs.reserve(gen.pheno_heads.size());
    for (auto& head : gen.pheno_heads) fwd.pheno_outputs.push_back(head.forward(t, trunk, trainable));
    return fwd;
}

namespace {

/// Greedy nearest-neighbor assignment of a parent's slots to its hidden
/// neighbors, by squared feature distance. Ties resolve to the smallest
/// (slot, target) pair.
std::vector<std::size_t> align_slots(const MaskEpisode& ep, const Matrix& slot_feats,
                                     const std::vector<std::size_t>& slot_parent) {
    std::vector<std::size_t> target_of(slot_parent.size(), SIZE_MAX);
    std::size_t base = 0;
    for (std::size_t r = 0; r < ep.hidden_neighbors.size(); ++r) {
        const auto& targets = ep.hidden_neighbors[r];
        const std::size_t m = targets.size();
        if (m == 0) continue;
        std::vector<std::uint8_t> slot_done(m, 0), tgt_done(m, 0);
        for (std::size_t pick = 0; pick < m; ++pick) {
            double best = std::numeric_limits<double>::infinity();
            std::size_t bs = 0, bt = 0;
            for (std::size_t s = 0; s < m; ++s) {
                if (slot_done[s]) continue;
                for (std::size_t k = 0; k < m; ++k) {
                    if (tgt_done[k]) continue;
                    const double d = row_sqdist(slot_feats, base + s, ep.hidden_x, targets[k]);
                    if (d < best) {
                        best = d;
                        bs = s;
                        bt = k;
                    }
                }
            }
            slot_done[bs] = 1;
            tgt_done[bt] = 1;
            target_of[base + bs] = targets[bt];
        }
        base += m;
    }
    return target_of;
}

} // namespace

InpaintLossRefs inpaint_losses(const MaskEpisode& ep, GeneratorForward& fwd, GeneratorState& gen,
                               DiscriminatorState& disc, double alpha, double beta,
                               bool use_discriminator, InpaintLossValues* values) {
    Tape& t = fwd.tape;
    InpaintLossRefs refs;

    // L_num over every retained node, zero-count targets included
    Tape::Ref targets = t.constant(Matrix::col_vector(ep.count_targets));
    refs.l_num = t.sum(t.square(t.sub(fwd.counts, targets)));

    const bool empty = !fwd.has_slots();
    if (empty) {
        Tape::Ref zero = t.constant(Matrix(1, 1, 0.0));
        refs.l_rec = zero;
        refs.l_gen = zero;
        refs.l_pheno = zero;
        refs.l_fea = zero;
        refs.l_total = refs.l_num;
    } else {
        const Matrix& slot_feats = t.value(fwd.features);
        const std::vector<std::size_t> target_of = align_slots(ep, slot_feats, fwd.slot_parent);

        Matrix x_true(slot_feats.rows(), slot_feats.cols());
        for (std::size_t s = 0; s < target_of.size(); ++s)
            for (std::size_t j = 0; j < x_true.cols(); ++j)
                x_true(s, j) = ep.hidden_x(target_of[s], j);
        refs.l_rec = t.sum(t.square(t.sub(fwd.features, t.constant(x_true))));

        if (use_discriminator && beta != 0.0) {
            // frozen discriminator: its weights enter as constants
            Tape::Ref d_raw = disc.forward(t, fwd.features, /*trainable=*/false);
            Tape::Ref d = t.clip(t.activation(d_raw, Act::sigmoid), kProbClip, 1.0 - kProbClip);
            // -E[1 - log d(x~)]
            refs.l_gen = t.affine(t.mean(t.affine(t.log(d), -1.0, 1.0)), -1.0, 0.0);
        } else {
            refs.l_gen = t.constant(Matrix(1, 1, 0.0));
        }

        // phenotype loss: cross-entropy per categorical field, squared error
        // (normalized units) per continuous field
        Tape::Ref pheno_acc = t.constant(Matrix(1, 1, 0.0));
        const std::size_t n_slots = target_of.size();
        for (std::size_t q = 0; q < gen.pheno_fields.size(); ++q) {
            const auto& field = gen.pheno_fields[q];
            if (field.kind == PhenoKind::categorical) {
                Matrix onehot(n_slots, field.n_categories);
                for (std::size_t s = 0; s < n_slots; ++s) {
                    const auto code = std::size_t(ep.hidden_u.values(target_of[s], q));
                    if (code >= field.n_categories)
                        throw schema_error("inpaint_losses: category code out of range in '" + field.name + "'");
                    onehot(s, code) = 1.0;
                }
                Tape::Ref probs = t.clip(t.softmax_rows(fwd.pheno_outputs[q]), kProbClip, 1.0 - kProbClip);
                Tape::Ref ce = t.affine(t.sum(t.mul_const(t.log(probs), onehot)), -1.0, 0.0);
                pheno_acc = t.add(pheno_acc, ce);
            } else {
                Matrix target(n_slots, 1);
                for (std::size_t s = 0; s < n_slots; ++s)
                    target(s, 0) = (ep.hidden_u.values(target_of[s], q) - gen.cont_mean[q]) / gen.cont_std[q];
                Tape::Ref se = t.sum(t.square(t.sub(fwd.pheno_outputs[q], t.constant(target))));
                pheno_acc = t.add(pheno_acc, se);
            }
        }
        refs.l_pheno = pheno_acc;

        refs.l_fea = t.add(t.affine(refs.l_rec, alpha, 0.0), t.affine(refs.l_gen, beta, 0.0));
        refs.l_total = t.add(t.add(refs.l_num, refs.l_fea), refs.l_pheno);
    }

    if (values) {
        values->l_num = t.value(refs.l_num)(0, 0);
        values->l_rec = t.value(refs.l_rec)(0, 0);
        values->l_gen = t.value(refs.l_gen)(0, 0);
        values->l_pheno = t.value(refs.l_pheno)(0, 0);
        values->l_fea = t.value(refs.l_fea)(0, 0);
        values->empty_hidden = empty;
    }
    return refs;
}

DiscriminatorLoss discriminator_loss(const Matrix& real_feats, const Matrix& fake_feats,
                                     DiscriminatorState& disc) {
    if (real_feats.rows() == 0 || fake_feats.rows() == 0)
        throw config_error("discriminator_loss: both batches must be nonempty");
    DiscriminatorLoss out;
    Tape& t = out.tape;
    Tape::Ref d_real = t.clip(t.activation(disc.forward(t, t.constant(real_feats), true), Act::sigmoid),
                              kProbClip, 1.0 - kProbClip);
    Tape::Ref d_fake = t.clip(t.activation(disc.forward(t, t.constant(fake_feats), true), Act::sigmoid),
                              kProbClip, 1.0 - kProbClip);
    // -E_real[1 - log d(x)] - E_fake[log d(x~)]
    Tape::Ref term_real = t.affine(t.mean(t.affine(t.log(d_real), -1.0, 1.0)), -1.0, 0.0);
    Tape::Ref term_fake = t.affine(t.mean(t.log(d_fake)), -1.0, 0.0);
    out.l_dis = t.add(term_real, term_fake);
    out.value = t.value(out.l_dis)(0, 0);
    return out;
}

InpaintLossValues local_inpaint_train_step(const PopulationGraph& g, GeneratorState& gen,
                                           DiscriminatorState& disc,
                                           const InpaintTrainConfig& cfg, Rng& rng,
                                           std::size_t step_index) {
    const std::size_t root = rng.uniform_index(g.n());
    const std::uint64_t ep_seed = rng.next_u64();
    MaskEpisode ep = cfg.random_masking
                         ? random_mask(g, cfg.mask_target, cfg.n_max, ep_seed)
                         : mask_leaves(g, root, cfg.mask_target, cfg.n_max, ep_seed);

    const bool gen_uses_disc = cfg.use_discriminator && cfg.beta != 0.0;
    const bool disc_update = cfg.use_discriminator && cfg.disc_interval > 0 &&
                             (step_index % cfg.disc_interval == 0);
    if (gen_uses_disc || disc_update) disc.refresh_spectral(cfg.sn_train_iters);

    GeneratorForward fwd = generator_forward(ep, gen, rng, /*trainable=*/true);
    InpaintLossValues report;
    InpaintLossRefs refs =
        inpaint_losses(ep, fwd, gen, disc, cfg.alpha, cfg.beta, cfg.use_discriminator, &report);
    fwd.tape.backward(refs.l_total);
    adam_step(gen.params(), cfg.lr);

    if (disc_update && fwd.has_slots() && ep.n_hidden() > 0) {
        const Matrix fake = fwd.tape.value(fwd.features); // detached copy
        DiscriminatorLoss dl = discriminator_loss(ep.hidden_x, fake, disc);
        dl.tape.backward(dl.l_dis);
        adam_step(disc.params(), cfg.lr);
        report.l_dis = dl.value;
        report.disc_updated = true;
    }
    return report;
}

FusedGraph graph_merge(const PopulationGraph& g, GeneratorState& gen, const MergeConfig& cfg,
                       Rng& rng) {
    FusedGraph fused;
    fused.n_real = g.n();

    // count inference on the uncorrupted graph
    Tape t;
    Tape::Ref x = t.constant(g.X);
    Tape::Ref a = t.constant(g.a_norm);
    Tape::Ref z = gen.enc2.forward(t, a, gen.enc1.forward(t, a, x, false), false);
    Tape::Ref counts = t.activation(gen.count_head.forward(t, z, false), Act::sigmoid);
    const Matrix& count_vals = t.value(counts);

    std::vector<std::size_t> parent;
    const auto n_max_int = long(std::llround(cfg.n_max));
    for (std::size_t i = 0; i < g.n(); ++i) {
        long c = std::llround(count_vals(i, 0) * cfg.n_max);
        c = std::max(0L, std::min(c, n_max_int));
        for (long s = 0; s < c; ++s) parent.push_back(i);
    }
    if (parent.empty()) {
        fused.graph = g;
        fused.nothing_generated = true;
        return fused;
    }
    const std::size_t n_gen = parent.size();

    Matrix noise(n_gen, gen.cfg.noise_dim);
    for (auto& v : noise.raw()) v = rng.normal();
    Tape::Ref z_slots = t.gather_rows(z, parent);
    Tape::Ref with_noise = t.concat_cols(z_slots, t.constant(noise));
    Tape::Ref h1 = gen.bn1.forward(t, t.activation(gen.feat1.forward(t, with_noise, false), Act::relu),
                                   /*training=*/false, false);
    Tape::Ref h2 = gen.bn2.forward(t, t.activation(gen.feat2.forward(t, h1, false), Act::relu),
                                   /*training=*/false, false);
    Tape::Ref feats = t.activation(gen.feat_out.forward(t, h2, false), Act::tanh);
    Tape::Ref trunk = t.activation(gen.pheno_trunk.forward(t, feats, false), Act::relu);
    std::vector<Matrix> pheno_preds;
    for (auto& head : gen.pheno_heads) pheno_preds.push_back(t.value(head.forward(t, trunk, false)));
    const Matrix& gen_x = t.value(feats);

    // decode phenotypes: argmax category / unnormalized regression value
    Matrix gen_u(n_gen, gen.pheno_fields.size());
    for (std::size_t q = 0; q < gen.pheno_fields.size(); ++q) {
        const auto& field = gen.pheno_fields[q];
        for (std::size_t s = 0; s < n_gen; ++s) {
            if (field.kind == PhenoKind::categorical) {
                std::size_t best = 0;
                for (std::size_t c = 1; c < field.n_categories; ++c)
                    if (pheno_preds[q](s, c) > pheno_preds[q](s, best)) best = c;
                gen_u(s, q) = double(best);
            } else {
                gen_u(s, q) = pheno_preds[q](s, 0) * gen.cont_std[q] + gen.cont_mean[q];
            }
        }
    }

    // assemble the fused graph
    const std::size_t n_total = g.n() + n_gen;
    PopulationGraph out;
    out.X = Matrix(n_total, g.feature_dim());
    for (std::size_t i = 0; i < g.n(); ++i)
        for (std::size_t j = 0; j < g.feature_dim(); ++j) out.X(i, j) = g.X(i, j);
    for (std::size_t s = 0; s < n_gen; ++s)
        for (std::size_t j = 0; j < g.feature_dim(); ++j) out.X(g.n() + s, j) = gen_x(s, j);

    Matrix gen_h = g.pca.project(gen_x);
    out.H = Matrix(n_total, g.H.cols());
    for (std::size_t i = 0; i < g.n(); ++i)
        for (std::size_t j = 0; j < g.H.cols(); ++j) out.H(i, j) = g.H(i, j);
    for (std::size_t s = 0; s < n_gen; ++s)
        for (std::size_t j = 0; j < g.H.cols(); ++j) out.H(g.n() + s, j) = gen_h(s, j);

    out.U.fields = g.U.fields;
    out.U.values = Matrix(n_total, g.U.n_fields());
    for (std::size_t i = 0; i < g.n(); ++i)
        for (std::size_t q = 0; q < g.U.n_fields(); ++q) out.U.values(i, q) = g.U.values(i, q);
    for (std::size_t s = 0; s < n_gen; ++s)
        for (std::size_t q = 0; q < g.U.n_fields(); ++q) out.U.values(g.n() + s, q) = gen_u(s, q);

    out.y = g.y;
    out.labeled_mask = g.labeled_mask;
    out.provenance = g.provenance;
    out.y.resize(n_total, -1);
    out.labeled_mask.resize(n_total, 0);
    out.provenance.resize(n_total, kNodeGenerated);

    out.A = Matrix(n_total, n_total);
    for (std::size_t i = 0; i < g.n(); ++i)
        for (std::size_t j = 0; j < g.n(); ++j) out.A(i, j) = g.A(i, j);

    const double sim_denom = 2.0 * g.sigma_used * g.sigma_used;
    const double gamma = g.params.gamma;
    for (std::size_t s = 0; s < n_gen; ++s) {
        const std::size_t gi = g.n() + s;
        if (!cfg.use_edge_prediction) {
            // ablation: binarized parent link only
            out.A(gi, parent[s]) = 1.0;
            continue;
        }
        // edges run between each generated node and the known (real) nodes
        std::vector<std::pair<double, std::size_t>> cand;
        cand.reserve(g.n());
        double parent_fused = 0.0, parent_fsim = 0.0;
        for (std::size_t v = 0; v < g.n(); ++v) {
            const double fsim = std::exp(-row_sqdist(out.H, gi, out.H, v) / sim_denom);
            double psim = 0.0;
            for (std::size_t q = 0; q < out.U.n_fields(); ++q) {
                const double a1 = out.U.values(gi, q), b1 = out.U.values(v, q);
                if (out.U.fields[q].kind == PhenoKind::categorical)
                    psim += (a1 == b1) ? 1.0 : 0.0;
                else
                    psim += (std::abs(a1 - b1) <= gamma) ? 1.0 : 0.0;
            }
            const double w = fsim * psim;
            if (v == parent[s]) {
                parent_fused = w;
                parent_fsim = fsim;
            }
            cand.emplace_back(w, v);
        }
        std::stable_sort(cand.begin(), cand.end(), [](const auto& a1, const auto& b1) {
            if (a1.first != b1.first) return a1.first > b1.first;
            return a1.second < b1.second;
        });
        bool parent_included = false;
        for (std::size_t tpos = 0; tpos < cand.size() && tpos < cfg.k_prime; ++tpos) {
            if (cand[tpos].first <= 0.0) break;
            out.A(gi, cand[tpos].second) = cand[tpos].first;
            if (cand[tpos].second == parent[s]) parent_included = true;
        }
        if (!parent_included)
            out.A(gi, parent[s]) = parent_fused > 0.0 ? parent_fused : parent_fsim;
    }
    // symmetrize by max and give generated nodes their self-loop
    for (std::size_t i = 0; i < n_total; ++i)
        for (std::size_t j = i + 1; j < n_total; ++j) {
            const double w = std::max(out.A(i, j), out.A(j, i));
            out.A(i, j) = w;
            out.A(j, i) = w;
        }
    for (std::size_t s = 0; s < n_gen; ++s) out.A(g.n() + s, g.n() + s) += 1.0;

    out.pca = g.pca;
    out.params = g.params;
    out.sigma_used = g.sigma_used;
    out.a_norm = normalized_adjacency(out.A);

    fused.graph = std::move(out);
    fused.parent_of = std::move(parent);
    return fused;
}

double feature_distribution_distance(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) throw dimension_error("feature_distribution_distance: dim mismatch");
    if (a.rows() == 0 || b.rows() == 0) throw config_error("feature_distribution_distance: empty sample");
    Matrix ma = col_means(a), mb = col_means(b);
    Matrix va = col_vars(a, ma), vb = col_vars(b, mb);
    double dist = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) {
        const double dm = ma(0, j) - mb(0, j);
        const double ds = std::sqrt(va(0, j)) - std::sqrt(vb(0, j));
        dist += dm * dm + ds * ds;
    }
    return dist;
}

} // namespace fedni
