#pragma once
// The progressive completion loop: update -> mine -> verify -> merge.

#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>

#include "pkgc/errors.hpp"
#include "pkgc/kg_store.hpp"
#include "pkgc/kge/checkpoint.hpp"
#include "pkgc/kge/model.hpp"
#include "pkgc/metrics.hpp"
#include "pkgc/miner.hpp"
#include "pkgc/trainer.hpp"
#include "pkgc/verifier.hpp"

namespace pkgc {

struct LoopConfig {
    std::size_t n_s = 50;
    std::size_t n_c = 1000;
    UpdateMode update_mode = UpdateMode::None;
    std::size_t delta_s = 5;
    std::size_t k_report = 50;
    bool rel_norm = false;
    std::string checkpoint_dir;  // empty: no crash-resume checkpoints
};

struct RunState {
    std::size_t step = 0;
    FactSet known;
    FactSet visited;
    FactSet pending_new;  // accepted since the last model update
    CompletionCurve curve;
};

struct Metrics {
    double moar = 0.0;
    double cr_at_k = 0.0;
    std::size_t k = 0;
    std::size_t n_s = 0;
    std::size_t n_c = 0;
    double rho = 0.0;
    std::string model;
    std::string update_mode;
    bool truncated = false;
    double svf_cover_rate = 1.0;
};

inline void write_metrics_json(std::ostream& out, const Metrics& m) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "{\"moar\":%.12g,\"cr_at_k\":%.12g,\"k\":%zu,\"n_s\":%zu,\"n_c\":%zu,\"rho\":%.12g,\"model\":\"%s\","
                  "\"update_mode\":\"%s\",\"truncated\":%s,\"svf_cover_rate\":%.12g}\n",
                  m.moar, m.cr_at_k, m.k, m.n_s, m.n_c, m.rho, m.model.c_str(), m.update_mode.c_str(),
                  m.truncated ? "true" : "false", m.svf_cover_rate);
    out << buf;
}

template <typename Real>
struct RunHooks {
    std::function<void(std::size_t step, const MiningStats&)> on_mined;
    std::function<void(std::size_t step, const VerificationResult&)> on_verified;
    std::function<void(std::size_t step, const EpochRecord&)> on_update_epoch;
    std::function<void(const CompletionCurve&)> on_curve;
    // Returning true stops the loop before the given step starts.
    std::function<bool(std::size_t step)> stop_before;
};

struct RunResult {
    RunState state;
    Metrics metrics;
    bool truncated = false;  // mining ran out of candidates
    bool aborted = false;    // live session closed mid-step
    bool stopped = false;    // stop_before hook fired
};

inline RunState initial_state(const Partition& part) {
    RunState s;
    s.known = part.known;
    s.visited = part.known;
    s.curve = CompletionCurve::start(part.known.size(), part.known.size() + part.unexplored.size());
    return s;
}

// Crash-resume checkpoint: model, fact sets and curve prefix.
template <typename Real>
void save_run_state(const std::string& dir, const RunState& state, const EmbeddingModel<Real>& model) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const fs::path base(dir);
    save_checkpoint((base / "model_state.ckpt").string(), model);
    auto write = [&](const char* name, const FactSet& facts) {
        std::ofstream out(base / name, std::ios::trunc);
        write_fact_ids(out, facts);
    };
    write("known.tsv", state.known);
    write("visited.tsv", state.visited);
    write("pending_new.tsv", state.pending_new);
    {
        std::ofstream out(base / "curve_state.csv", std::ios::trunc);
        write_curve_csv(out, state.curve);
    }
    // Written last: its presence marks a complete checkpoint.
    std::ofstream out(base / "run_state.txt", std::ios::trunc);
    out << "step=" << state.step << "\ntotal=" << state.curve.total << "\n";
}

template <typename Real>
std::pair<RunState, EmbeddingModel<Real>> load_run_state(const std::string& dir) {
    namespace fs = std::filesystem;
    const fs::path base(dir);
    std::ifstream meta(base / "run_state.txt");
    if (!meta) throw DataError("no run checkpoint in " + dir);
    RunState state;
    std::size_t total = 0;
    std::string line;
    while (std::getline(meta, line)) {
        if (line.rfind("step=", 0) == 0) state.step = std::stoull(line.substr(5));
        if (line.rfind("total=", 0) == 0) total = std::stoull(line.substr(6));
    }
    auto read = [&](const char* name) {
        std::ifstream in(base / name);
        if (!in) throw DataError("missing " + (base / name).string());
        return read_fact_ids(in, (base / name).string());
    };
    state.known = read("known.tsv");
    state.visited = read("visited.tsv");
    state.pending_new = read("pending_new.tsv");
    std::ifstream curve_in(base / "curve_state.csv");
    if (!curve_in) throw DataError("missing curve_state.csv in " + dir);
    state.curve = read_curve_csv(curve_in, total);
    return {std::move(state), load_checkpoint<Real>((base / "model_state.ckpt").string())};
}

// Runs steps state.step + 1 .. n_s. At a step divisible by delta_s the model
// is first updated on the facts accepted since the previous update; then
// n_c candidates are mined, verified and merged. `resume` continues from a
// saved state instead of the partition's initial one.
template <typename Real>
RunResult run(EmbeddingModel<Real>& model, const Partition& part, const SemanticValidityFilter* svf,
              const TrainConfig& train_cfg, MiningConfig mining_cfg, const LoopConfig& loop, Verifier& verifier,
              const RunHooks<Real>& hooks = {}, std::optional<RunState> resume = std::nullopt) {
    if (loop.n_c == 0) throw ConfigError("n_c must be at least 1");
    if (loop.delta_s == 0) throw ConfigError("delta_s must be at least 1");
    if (loop.k_report > loop.n_s) throw ConfigError("k must not exceed n_s");
    mining_cfg.n_c = loop.n_c;

    RunResult result;
    RunState& state = result.state;
    state = resume ? std::move(*resume) : initial_state(part);
    if (hooks.on_curve) hooks.on_curve(state.curve);

    for (std::size_t step = state.step + 1; step <= loop.n_s; ++step) {
        if (hooks.stop_before && hooks.stop_before(step)) {
            result.stopped = true;
            break;
        }
        if (loop.update_mode != UpdateMode::None && step % loop.delta_s == 0) {
            TrainConfig cfg = train_cfg;
            cfg.seed = train_cfg.seed + step;
            std::function<void(const EpochRecord&)> on_epoch;
            if (hooks.on_update_epoch) on_epoch = [&](const EpochRecord& r) { hooks.on_update_epoch(step, r); };
            incremental_update(model, state.known, state.pending_new, loop.update_mode, cfg, on_epoch);
            state.pending_new.clear();
        }

        MiningResult mined = loop.rel_norm ? mine(apply_relation_normalization(model), state.visited, svf, mining_cfg)
                                           : mine(model, state.visited, svf, mining_cfg);
        if (hooks.on_mined) hooks.on_mined(step, mined.stats);
        if (mined.ranked.empty()) {
            result.truncated = true;
            break;
        }

        VerificationResult verified;
        try {
            verified = verifier.verify(step, mined.ranked);
        } catch (const SessionClosed&) {
            result.aborted = true;
            break;
        }
        if (hooks.on_verified) hooks.on_verified(step, verified);

        for (const auto& c : mined.ranked)
            if (!verified.timed_out.contains_packed(c.key)) state.visited.insert_packed(c.key);
        state.known.merge(verified.accepted);
        state.pending_new.merge(verified.accepted);
        state.curve.append(mined.ranked.size(), verified.accepted.size(), state.known.size());
        state.step = step;
        if (hooks.on_curve) hooks.on_curve(state.curve);
        if (!loop.checkpoint_dir.empty() && step % loop.delta_s == 0) save_run_state(loop.checkpoint_dir, state, model);
    }

    auto& m = result.metrics;
    m.k = loop.k_report;
    m.n_s = loop.n_s;
    m.n_c = loop.n_c;
    m.rho = state.curve.rho();
    m.model = std::string(family_name(model.family()));
    m.update_mode = std::string(update_mode_name(loop.update_mode));
    m.truncated = result.truncated;
    m.moar = moar(state.curve, loop.n_c, loop.n_s);
    // A curve that stopped early stays at its last value.
    m.cr_at_k = cr_at_k(state.curve, std::min(loop.k_report, state.curve.last_step()));
    if (svf) m.svf_cover_rate = svf->cover_rate(part.unexplored);
    return result;
}

}  // namespace pkgc
