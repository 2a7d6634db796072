#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "fedni/datagen.hpp"
#include "fedni/errors.hpp"
#include "fedni/harness.hpp"
#include "verify_checks.hpp"

namespace {

std::uint64_t seed_from_env(std::uint64_t fallback) {
    if (const char* env = std::getenv("FEDNI_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw fedni::config_error("FEDNI_SEED must be an unsigned integer");
        }
    }
    return fallback;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw fedni::format_error("cannot write " + path.string());
    out << content;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fedni: federated population-graph learning with network inpainting"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate a synthetic cohort dataset");
    std::string gen_spec, gen_out;
    gen->add_option("--spec", gen_spec, "cohort spec file (key = value lines)");
    gen->add_option("--out", gen_out, "output dataset path")->required();

    // run
    auto* run = app.add_subcommand("run", "run one experiment configuration");
    std::string run_config, run_data, run_out;
    run->add_option("--config", run_config, "experiment config file");
    run->add_option("--data", run_data, "dataset path (from `fedni gen`)")->required();
    run->add_option("--out", run_out, "output directory")->required();

    // ablate
    auto* ablate = app.add_subcommand("ablate", "run an ablation matrix with pairwise t-tests");
    std::string ab_matrix, ab_data, ab_out;
    ablate->add_option("--matrix", ab_matrix, "INI-style matrix file of named configs")->required();
    ablate->add_option("--data", ab_data, "dataset path")->required();
    ablate->add_option("--out", ab_out, "output directory")->required();

    // verify
    auto* verify = app.add_subcommand("verify", "run the oracle and property suites");
    bool verify_full = false;
    verify->add_flag("--full", verify_full, "include the long-running end-to-end checks");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            fedni::CohortSpec spec =
                gen_spec.empty() ? fedni::CohortSpec::defaults() : fedni::parse_cohort_spec_file(gen_spec);
            spec.seed = seed_from_env(spec.seed);
            fedni::PopulationGraph g = fedni::generate_population(spec);
            fedni::save_dataset(g, gen_out);
            std::cout << "wrote " << gen_out << " (n=" << g.n() << ", d=" << g.feature_dim() << ")\n";
        } else if (run->parsed()) {
            fedni::ExperimentConfig config = run_config.empty()
                                                 ? fedni::ExperimentConfig{}
                                                 : fedni::ExperimentConfig::parse_file(run_config);
            config.seed = seed_from_env(config.seed);
            fedni::PopulationGraph data = fedni::load_dataset(run_data);
            fedni::ExperimentResult result = fedni::run_experiment(config, data);

            std::filesystem::create_directories(run_out);
            write_file(std::filesystem::path(run_out) / "report.json", fedni::render_report_json(result));
            write_file(std::filesystem::path(run_out) / "report.csv", fedni::render_report_csv(result));
            write_file(std::filesystem::path(run_out) / "timings.json", fedni::render_timings_json(result));
            std::cout << "mode=" << fedni::mode_name(config.mode)
                      << " accuracy=" << result.summary.mean_accuracy << " (+/-"
                      << result.summary.std_accuracy << ") auc=" << result.summary.mean_auc
                      << " over " << result.summary.n_cells << " cells\n";
        } else if (ablate->parsed()) {
            auto variants = fedni::parse_ablation_matrix_file(ab_matrix);
            for (auto& v : variants) v.config.seed = seed_from_env(v.config.seed);
            fedni::PopulationGraph data = fedni::load_dataset(ab_data);
            fedni::AblationResult result = fedni::run_ablation(variants, data);
            std::filesystem::create_directories(ab_out);
            write_file(std::filesystem::path(ab_out) / "ablation.json",
                       fedni::render_ablation_json(result));
            for (std::size_t i = 0; i < result.names.size(); ++i)
                std::cout << result.names[i] << ": accuracy=" << result.results[i].summary.mean_accuracy
                          << " auc=" << result.results[i].summary.mean_auc << "\n";
        } else if (verify->parsed()) {
            const int failures = fedni::verify::run_suites(verify_full, std::cout);
            return failures == 0 ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
