#include "fedni/federation.hpp"

#include <chrono>
#include <iostream>

#include "fedni/errors.hpp"

namespace fedni {

Message Transport::normalize(Message m) const {
    if (byte_mode_) m.weights = deserialize_weights(serialize_weights(m.weights));
    return m;
}

void Transport::upload(Message m) {
    m.kind = MsgKind::weights_upload;
    Message wire = normalize(std::move(m));
    server_log_.push_back(wire);
    full_log_.push_back(wire);
    inbox_.push_back(std::move(wire));
}

std::vector<Message> Transport::drain_server_inbox() {
    std::vector<Message> out;
    out.swap(inbox_);
    return out;
}

void Transport::broadcast(const Message& m) {
    Message wire = normalize(m);
    wire.kind = MsgKind::weights_broadcast;
    full_log_.push_back(wire);
    broadcasts_.push_back(std::move(wire));
}

const Message& Transport::last_broadcast() const {
    if (broadcasts_.empty()) throw protocol_error("no broadcast available");
    return broadcasts_.back();
}

WeightVector fedavg_aggregate(const std::vector<WeightVector>& weights) {
    if (weights.empty()) throw protocol_error("fedavg_aggregate: no client weights");
    const WeightVector& base = weights.front();
    for (std::size_t c = 1; c < weights.size(); ++c) {
        if (!weights[c].manifest_matches(base))
            throw protocol_error("fedavg_aggregate: client " + std::to_string(c) +
                                 " manifest diverges from client 0");
        if (weights[c].values.size() != base.values.size())
            throw protocol_error("fedavg_aggregate: client " + std::to_string(c) + " value count diverges");
    }
    const double inv_m = 1.0 / double(weights.size());
    WeightVector out = base;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        double delta = 0.0;
        for (const auto& w : weights) delta += w.values[i] - base.values[i];
        out.values[i] = base.values[i] + delta * inv_m;
    }
    return out;
}

WeightVector dp_perturb(const WeightVector& w, double sigma_dp, Rng& rng) {
    if (sigma_dp < 0.0) throw config_error("dp_perturb: sigma must be >= 0");
    if (sigma_dp == 0.0) return w;
    WeightVector out = w;
    for (auto& v : out.values) v += sigma_dp * rng.normal();
    return out;
}

InpaintFlMode inpaint_fl_from_name(const std::string& name) {
    if (name == "fl_g") return InpaintFlMode::fl_g;
    if (name == "fl_d") return InpaintFlMode::fl_d;
    if (name == "fl_d_g") return InpaintFlMode::fl_d_g;
    if (name == "nofl_d_g") return InpaintFlMode::nofl_d_g;
    throw config_error("unknown inpaint_fl mode: " + name);
}

const char* inpaint_fl_name(InpaintFlMode m) {
    switch (m) {
        case InpaintFlMode::fl_g: return "fl_g";
        case InpaintFlMode::fl_d: return "fl_d";
        case InpaintFlMode::fl_d_g: return "fl_d_g";
        case InpaintFlMode::nofl_d_g: return "nofl_d_g";
    }
    return "?";
}

namespace {
std::vector<ParamTensor*> federated_params(InpaintClient& c, InpaintFlMode mode) {
    std::vector<ParamTensor*> out;
    switch (mode) {
        case InpaintFlMode::fl_g:
            out = c.gen.params();
            break;
        case InpaintFlMode::fl_d:
            out = c.disc.params();
            break;
        case InpaintFlMode::fl_d_g: {
            out = c.gen.params();
            auto d = c.disc.params();
            out.insert(out.end(), d.begin(), d.end());
            break;
        }
        case InpaintFlMode::nofl_d_g:
            break;
    }
    return out;
}

double now_ms() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double, std::milli>(clock::now().time_since_epoch()).count();
}
} // namespace

std::vector<RoundLog> run_phase1(std::vector<InpaintClient>& clients, const Phase1Config& cfg,
                                 Transport& transport) {
    std::vector<InpaintClient*> active;
    for (auto& c : clients) {
        if (c.graph.n() == 0)
            std::cerr << "[fedni] phase1: excluding client " << c.id << " (empty graph)\n";
        else
            active.push_back(&c);
    }
    if (active.empty()) throw config_error("run_phase1: no usable clients");

    std::vector<RoundLog> logs;
    for (std::size_t round = 0; round < cfg.rounds; ++round) {
        const double t0 = now_ms();
        RoundLog log;
        log.round = round;

        for (InpaintClient* c : active) {
            double loss_sum = 0.0;
            for (std::size_t e = 0; e < cfg.epochs; ++e) {
                InpaintLossValues v = local_inpaint_train_step(c->graph, c->gen, c->disc, cfg.train,
                                                               c->rng_train, c->steps_done++);
                loss_sum = v.l_num + v.l_fea + v.l_pheno;
            }
            log.client_losses.push_back(loss_sum);

            if (cfg.fl_mode != InpaintFlMode::nofl_d_g) {
                Message m;
                m.round = round;
                m.client_id = c->id;
                m.phase = "inpaint";
                m.weights = dp_perturb(pack_params(federated_params(*c, cfg.fl_mode)), cfg.sigma_dp,
                                       c->rng_dp);
                m.scalars["train_loss"] = log.client_losses.back();
                transport.upload(std::move(m));
            }
        }

        if (cfg.fl_mode != InpaintFlMode::nofl_d_g) {
            std::vector<Message> uploads = transport.drain_server_inbox();
            std::vector<WeightVector> ws;
            ws.reserve(uploads.size());
            for (auto& m : uploads) ws.push_back(std::move(m.weights));
            Message bc;
            bc.round = round;
            bc.phase = "inpaint";
            bc.weights = fedavg_aggregate(ws);
            transport.broadcast(bc);
            const WeightVector& global = transport.last_broadcast().weights;
            for (InpaintClient* c : active) unpack_params(global, federated_params(*c, cfg.fl_mode));
        }

        double mean_loss = 0.0;
        for (double v : log.client_losses) mean_loss += v;
        log.server_loss = mean_loss / double(log.client_losses.size());
        log.wall_ms = now_ms() - t0;
        logs.push_back(std::move(log));
    }
    return logs;
}

std::vector<RoundLog> run_phase2(std::vector<ClassifierClient>& clients, const Phase2Config& cfg,
                                 Transport& transport) {
    std::vector<ClassifierClient*> active;
    for (auto& c : clients) {
        if (!c.graph || c.graph->n() == 0)
            std::cerr << "[fedni] phase2: excluding client " << c.id << " (empty graph)\n";
        else
            active.push_back(&c);
    }
    if (active.empty()) throw config_error("run_phase2: no usable clients");

    std::vector<RoundLog> logs;
    for (std::size_t round = 0; round < cfg.rounds; ++round) {
        const double t0 = now_ms();
        RoundLog log;
        log.round = round;

        for (ClassifierClient* c : active) {
            double loss = 0.0;
            for (std::size_t e = 0; e < cfg.epochs; ++e)
                loss = train_classifier_epoch(*c->graph, c->clf, c->train_mask, cfg.lr);
            log.client_losses.push_back(loss);

            Message m;
            m.round = round;
            m.client_id = c->id;
            m.phase = "classify";
            m.weights = dp_perturb(pack_params(c->clf.params()), cfg.sigma_dp, c->rng_dp);
            m.scalars["train_loss"] = loss;
            transport.upload(std::move(m));
        }

        std::vector<Message> uploads = transport.drain_server_inbox();
        std::vector<WeightVector> ws;
        ws.reserve(uploads.size());
        for (auto& m : uploads) ws.push_back(std::move(m.weights));
        Message bc;
        bc.round = round;
        bc.phase = "classify";
        bc.weights = fedavg_aggregate(ws);
        transport.broadcast(bc);
        const WeightVector& global = transport.last_broadcast().weights;
        for (ClassifierClient* c : active) unpack_params(global, c->clf.params());

        // global-model training loss, reported by each client as a scalar
        double agg = 0.0;
        for (ClassifierClient* c : active) agg += classifier_loss(*c->graph, c->clf, c->train_mask);
        log.server_loss = agg / double(active.size());
        log.wall_ms = now_ms() - t0;
        logs.push_back(std::move(log));
    }
    return logs;
}

} // namespace fedni
