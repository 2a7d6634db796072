#ifndef FEDNI_FEDERATION_HPP
#define FEDNI_FEDERATION_HPP

#include <map>
#include <string>
#include <vector>

#include "fedni/classifier.hpp"
#include "fedni/inpaint.hpp"
#include "fedni/rng.hpp"
#include "fedni/weights.hpp"

namespace fedni {

enum class MsgKind { weights_upload, weights_broadcast };

/// The only thing that crosses the client/server boundary: weight vectors and
/// scalar loss summaries. Raw features, adjacency, phenotypes and labels have
/// no carrier here by construction; the transport log makes that auditable.
struct Message {
    MsgKind kind = MsgKind::weights_upload;
    std::size_t round = 0;
    std::size_t client_id = 0;
    std::string phase;
    WeightVector weights;
    std::map<std::string, double> scalars;
};

/// In-process synchronous transport with a full audit log. In byte mode every
/// weight payload round-trips through the wire serialization.
class Transport {
public:
    explicit Transport(bool byte_mode = true) : byte_mode_(byte_mode) {}

    void upload(Message m);
    std::vector<Message> drain_server_inbox();
    void broadcast(const Message& m);
    const Message& last_broadcast() const;

    /// Every message ever uploaded to the server.
    const std::vector<Message>& server_log() const { return server_log_; }
    /// Every message in either direction.
    const std::vector<Message>& full_log() const { return full_log_; }

private:
    Message normalize(Message m) const;
    bool byte_mode_;
    std::vector<Message> inbox_;
    std::vector<Message> server_log_;
    std::vector<Message> full_log_;
    std::vector<Message> broadcasts_;
};

/// Unweighted elementwise mean with identical-manifest verification. The sum
/// is a sequential left-fold of deltas against the first client, which makes
/// the mean of identical inputs bit-exact for any client count.
WeightVector fedavg_aggregate(const std::vector<WeightVector>& weights);

/// Adds N(0, sigma_dp^2) to every element. sigma_dp == 0 returns the input
/// bit-identically without consuming randomness.
WeightVector dp_perturb(const WeightVector& w, double sigma_dp, Rng& rng);

enum class InpaintFlMode { fl_g, fl_d, fl_d_g, nofl_d_g };
InpaintFlMode inpaint_fl_from_name(const std::string& name);
const char* inpaint_fl_name(InpaintFlMode m);

struct RoundLog {
    std::size_t round = 0;
    std::vector<double> client_losses;
    double server_loss = 0; // post-aggregation loss of the global model
    std::map<std::string, double> eval;
    double wall_ms = 0; // excluded from deterministic reports
};

struct InpaintClient {
    std::size_t id = 0;
    PopulationGraph graph;
    GeneratorState gen;
    DiscriminatorState disc;
    Rng rng_train;
    Rng rng_dp;
    std::size_t steps_done = 0;
};

struct Phase1Config {
    std::size_t rounds = 30;
    std::size_t epochs = 10; // local steps per round
    InpaintTrainConfig train;
    double sigma_dp = 0.01;
    InpaintFlMode fl_mode = InpaintFlMode::fl_g;
};

/// Algorithm: per round every client runs `epochs` local inpainting steps
/// (generator and its local discriminator), uploads DP-perturbed weights of
/// the federated component only, the server averages and broadcasts. In the
/// default fl_g mode discriminators never cross the wire. Clients with empty
/// graphs are excluded with a warning.
std::vector<RoundLog> run_phase1(std::vector<InpaintClient>& clients, const Phase1Config& cfg,
                                 Transport& transport);

struct ClassifierClient {
    std::size_t id = 0;
    const PopulationGraph* graph = nullptr; // fused or raw local graph
    ClassifierState clf;
    std::vector<std::uint8_t> train_mask;
    Rng rng_dp;
};

struct Phase2Config {
    std::size_t rounds = 10;
    std::size_t epochs = 10;
    double lr = 1e-3;
    double sigma_dp = 0.01;
};

/// FedAvg over the GCN classifier: E full-batch epochs per round, DP-perturbed
/// upload, average, broadcast. server_loss in each RoundLog is the mean
/// client training loss of the freshly broadcast global model.
std::vector<RoundLog> run_phase2(std::vector<ClassifierClient>& clients, const Phase2Config& cfg,
                                 Transport& transport);

} // namespace fedni

#endif
