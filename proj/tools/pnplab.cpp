// pnplab: Tweedie-scaled plug-and-play experiments and estimators.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "pnplab/analysis.hpp"
#include "pnplab/config.hpp"
#include "pnplab/experiments.hpp"
#include "pnplab/output.hpp"
#include "pnplab/selftest.hpp"

namespace fs = std::filesystem;
using namespace pnplab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitDegenerate = 2;

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::size_t workers = 1;
    bool record_timing = false;
};

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// --seed, then the config's own "seed", then PNPLAB_SEED, then 0.
std::uint64_t resolve_seed(const CommonFlags& flags, const Json& config) {
    if (flags.seed) return *flags.seed;
    if (config.is_object() && config.contains("seed")) return config.at("seed").get<std::uint64_t>();
    if (config.is_object() && config.contains("resolved_spec") && config["resolved_spec"].contains("seed")) {
        return config["resolved_spec"]["seed"].get<std::uint64_t>();
    }
    if (const char* env = std::getenv("PNPLAB_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw ConfigError("PNPLAB_SEED is not an unsigned integer");
        }
    }
    return 0;
}

/// Creates the directory and proves it is writable before any computation.
void prepare_output_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "': " + ec.message());
    const fs::path probe = dir / ".pnplab_write_probe";
    {
        std::ofstream f(probe);
        if (!f) throw ConfigError("output directory '" + dir.string() + "' is not writable");
    }
    fs::remove(probe, ec);
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write '" + path.string() + "'");
    f << content;
    if (!f) throw ConfigError("write failed for '" + path.string() + "'");
}

/// Write-then-rename so a reader never sees a partial manifest.
void write_atomically(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    write_file(tmp, content);
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw ConfigError("cannot finalize '" + path.string() + "': " + ec.message());
}

void write_manifest(const fs::path& dir, const std::string& command, const CommonFlags& flags, const Json& resolved,
                    std::uint64_t seed, const std::string& started) {
    Json manifest{{"command", command},
                  {"config_path", flags.config_path},
                  {"resolved_spec", resolved},
                  {"seed", seed},
                  {"workers", flags.workers},
                  {"tool_version", PNPLAB_VERSION},
                  {"started_at", started},
                  {"finished_at", utc_now()}};
    write_atomically(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::string metric_file_stem(const std::string& metric) {
    std::string out;
    for (char c : metric) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') ? c : '_';
    return out;
}

int cmd_run(const std::string& name, const CommonFlags& flags) {
    const auto kind = parse_experiment_kind(name);
    if (!kind) {
        std::cerr << "error: unknown experiment '" << name
                  << "'; valid names: delta-sweep, stability, conv-reg, lipschitz\n";
        return kExitConfig;
    }
    const std::string started = utc_now();
    const Json config = flags.config_path.empty() ? Json::object() : load_json_file(flags.config_path);
    ExperimentSpec spec = parse_experiment_spec(config, *kind);
    spec.seed = resolve_seed(flags, config);
    spec.workers = flags.workers;

    std::string out_dir = flags.out_dir;
    if (out_dir.empty() && config.is_object() && config.contains("output_dir")) {
        out_dir = config.at("output_dir").get<std::string>();
    }
    if (out_dir.empty()) out_dir = "pnplab_out";
    const fs::path dir(out_dir);
    prepare_output_dir(dir);

    const auto records = run_experiment(spec);
    write_file(dir / (name + ".csv"), to_csv(records, spec.seed, {flags.record_timing}));
    for (const auto& metric : metric_names(records)) {
        const auto svg = render_svg(metric_series(records, metric), name + ": " + metric, key_label(*kind), metric);
        write_file(dir / (name + "_" + metric_file_stem(metric) + ".svg"), svg);
    }
    write_manifest(dir, "run " + name, flags, spec_to_json(spec), spec.seed, started);

    std::size_t diverged = 0;
    for (const auto& r : records) diverged += r.metrics.count("diverged");
    std::cout << name << ": " << records.size() << " records written to " << (dir / (name + ".csv")).string();
    if (diverged) std::cout << " (" << diverged << " diverged grid points)";
    std::cout << '\n';
    return kExitOk;
}

int cmd_delta_opt(const CommonFlags& flags) {
    const std::string started = utc_now();
    if (flags.config_path.empty()) throw ConfigError("delta-opt requires --config");
    const Json config = load_json_file(flags.config_path);
    const DeltaOptConfig cfg = parse_delta_opt_config(config);
    const std::uint64_t seed = resolve_seed(flags, config);
    const double sigma = cfg.sigma;
    const Denoiser d = cfg.build();

    std::string out_dir = flags.out_dir.empty() ? cfg.output_dir : flags.out_dir;
    if (out_dir.empty()) out_dir = "pnplab_out";
    const fs::path dir(out_dir);
    prepare_output_dir(dir);

    const auto rep = verify_sandwich(d, cfg.prior, sigma, cfg.samples, seed, {flags.workers});
    std::cout << "delta_opt_sq = " << format_double(rep.delta_opt.delta_opt_sq) << '\n'
              << "stderr = " << format_double(rep.delta_opt.std_error) << '\n'
              << "L2(mmse) = " << format_double(rep.l2_mmse.value) << " +- " << format_double(rep.l2_mmse.std_error)
              << '\n'
              << "L2(scaled) = " << format_double(rep.l2_scaled.value) << " +- "
              << format_double(rep.l2_scaled.std_error) << '\n'
              << "L2(base) = " << format_double(rep.l2_base.value) << " +- " << format_double(rep.l2_base.std_error)
              << '\n'
              << "sandwich: " << (rep.pass ? "pass" : "fail") << '\n';

    ExperimentRecord rec{"delta-opt", sigma, {}, 0.0};
    rec.metrics = {{"delta_opt_sq", rep.delta_opt.delta_opt_sq},
                   {"delta_opt_sq_stderr", rep.delta_opt.std_error},
                   {"numerator", rep.delta_opt.numerator},
                   {"denominator", rep.delta_opt.denominator},
                   {"l2_mmse", rep.l2_mmse.value},
                   {"l2_scaled", rep.l2_scaled.value},
                   {"l2_base", rep.l2_base.value},
                   {"margin_lower", rep.margin_lower},
                   {"margin_upper", rep.margin_upper},
                   {"sandwich_pass", rep.pass ? 1.0 : 0.0}};
    write_file(dir / "delta-opt.csv", to_csv({rec}, seed));
    write_manifest(dir, "delta-opt", flags, delta_opt_config_to_json(cfg, seed), seed, started);
    return kExitOk;
}

void add_common(CLI::App* cmd, CommonFlags& flags, bool config_required) {
    auto* opt = cmd->add_option("--config", flags.config_path, "JSON config (or a previous run manifest)");
    if (config_required) opt->required();
    cmd->add_option("--out", flags.out_dir, "output directory (default: config output_dir or ./pnplab_out)");
    cmd->add_option("--seed", flags.seed, "seed override (fallback: config seed, then PNPLAB_SEED)");
    cmd->add_option("--workers", flags.workers, "worker threads; output does not depend on it")
        ->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pnplab: Tweedie scaling for plug-and-play denoisers"};
    app.require_subcommand(1);
    CommonFlags flags;

    auto* delta_opt = app.add_subcommand("delta-opt", "estimate delta_opt^2 and check the L2 sandwich");
    add_common(delta_opt, flags, true);

    std::string experiment;
    auto* run = app.add_subcommand("run", "run an experiment: delta-sweep | stability | conv-reg | lipschitz");
    run->add_option("name", experiment, "experiment name")->required();
    add_common(run, flags, false);
    run->add_flag("--record-timing", flags.record_timing, "write measured runtime_ms (makes CSVs non-reproducible)");

    auto* selftest = app.add_subcommand("selftest", "run the fast oracle checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*selftest) return run_selftest(std::cout);
        if (*delta_opt) return cmd_delta_opt(flags);
        if (*run) return cmd_run(experiment, flags);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DegenerateDenoiser& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitDegenerate;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    return kExitOk;
}
