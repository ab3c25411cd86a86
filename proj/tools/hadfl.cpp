#include "hadfl/checkpoint.hpp"
#include "hadfl/config.hpp"
#include "hadfl/errors.hpp"
#include "hadfl/metrics.hpp"
#include "hadfl/runner.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace hadfl;

namespace {

enum Exit { ok = 0, config_error = 1, aborted_run = 2, io_error = 3 };

std::string run_stem(const ExperimentConfig& c, std::uint64_t seed) {
    return std::string(to_string(c.scheme)) + "_seed" + std::to_string(seed);
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& out_dir,
            const std::string& scheme, bool quiet) {
    ExperimentConfig cfg = load_config(config_path);
    if (seed) cfg.seeds = {*seed};
    if (!scheme.empty()) cfg.scheme = parse_scheme(scheme);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    cfg.validate();

    const fs::path out(cfg.output_dir);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw IoError("cannot create output directory " + out.string() + ": " + ec.message());
    const std::uint64_t digest = config_digest(cfg);
    int status = ok;
    for (std::uint64_t s : cfg.seeds) {
        const std::string stem = run_stem(cfg, s);
        const TrainingTask task = make_task(cfg, s);
        const fs::path ckpt_dir = out / (stem + "_checkpoints");
        fs::remove_all(ckpt_dir, ec);
        DirectoryCheckpointStore store(ckpt_dir);
        RunOptions opts;
        opts.store = &store;
        opts.config_hash = digest;
        const RunResult result = run_scheme(cfg, task, s, opts);

        MetricsFile mf{std::string(to_string(cfg.scheme)), s, digest, result.metrics};
        save_metrics(out / (stem + ".tsv"), mf);
        Checkpoint final_ckpt{result.final_params,
                              result.metrics.empty() ? 0u : result.metrics.back().sync_round, result.elapsed, digest};
        const auto bytes = encode_checkpoint(final_ckpt);
        std::ofstream f(out / (stem + "_final.bin"), std::ios::binary | std::ios::trunc);
        f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!f) throw IoError("cannot write final checkpoint for " + stem);

        for (const auto& w : result.warnings) std::cerr << stem << ": warning: " << w << "\n";
        if (result.aborted) {
            std::cerr << stem << ": run aborted: " << result.abort_reason << "\n";
            status = aborted_run;
        }
        if (!quiet) {
            const auto& last = result.metrics;
            std::printf("%s: %zu rounds, virtual time %.3f s, final accuracy %s\n", stem.c_str(), last.size(),
                        to_double(result.elapsed),
                        last.empty() ? "n/a" : std::to_string(last.back().test_accuracy).c_str());
        }
    }
    return status;
}

int cmd_compare(const std::vector<std::string>& files, const std::string& out_dir) {
    std::vector<MetricsFile> runs;
    for (const auto& f : files) runs.push_back(read_metrics(f));
    if (runs.size() < 2) throw ConfigError("files", "compare needs at least two metrics files");
    const Comparison c = compare_runs(runs);
    const std::string table = format_comparison(c);
    std::cout << table;
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::ofstream t(fs::path(out_dir) / "comparison.txt", std::ios::trunc);
        t << table;
        std::ofstream j(fs::path(out_dir) / "comparison.json", std::ios::trunc);
        j << comparison_json(c);
        if (!t || !j) throw IoError("cannot write comparison files to " + out_dir);
    }
    return ok;
}

int cmd_inspect(const std::string& path) {
    const Checkpoint c = read_checkpoint_file(path);
    double norm = 0.0;
    for (double v : c.params.values()) norm += v * v;
    std::printf("sync_round     %llu\n", static_cast<unsigned long long>(c.sync_round));
    std::printf("config_digest  %016llx\n", static_cast<unsigned long long>(c.config_hash));
    std::printf("dim            %zu\n", c.params.dim());
    std::printf("l2_norm        %.17g\n", std::sqrt(norm));
    std::printf("params_digest  %016llx\n", static_cast<unsigned long long>(digest(c.params)));
    std::printf("head          ");
    for (std::size_t i = 0; i < std::min<std::size_t>(c.params.dim(), 8); ++i) std::printf(" %.6g", c.params[i]);
    std::printf("\n");
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Heterogeneity-aware decentralized federated learning simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir, scheme;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
    auto* run = app.add_subcommand("run", "Run the configured scheme for every seed");
    run->add_option("--config", config_path, "Experiment config file")->required();
    run->add_option("--seed", seed, "Run only this seed");
    run->add_option("--out", out_dir, "Output directory (overrides the config)");
    run->add_option("--scheme", scheme, "hadfl, dfedavg or sync-allreduce (overrides the config)");
    run->add_flag("--quiet", quiet, "Only report errors");

    std::vector<std::string> files;
    std::string compare_out;
    auto* compare = app.add_subcommand("compare", "Summarize metrics files from several runs");
    compare->add_option("files", files, "Metrics files")->required();
    compare->add_option("--out", compare_out, "Also write comparison.txt and comparison.json here");

    std::string ckpt_path;
    auto* inspect = app.add_subcommand("inspect-checkpoint", "Print a checkpoint's header and summary");
    inspect->add_option("path", ckpt_path, "Checkpoint file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_error;
    }

    try {
        if (*run) return cmd_run(config_path, seed, out_dir, scheme, quiet);
        if (*compare) return cmd_compare(files, compare_out);
        if (*inspect) return cmd_inspect(ckpt_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return config_error;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return io_error;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return io_error;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return config_error;
    }
    return ok;
}
