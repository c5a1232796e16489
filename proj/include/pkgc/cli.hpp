#pragma once
// The `pkgc` command line: pretrain, run, bench-mining.
//
// Exit codes: 0 success, 2 configuration error, 3 data error,
// 4 training divergence, 1 anything else.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>

#include <CLI11.hpp>

#include "pkgc/config.hpp"
#include "pkgc/dataset.hpp"
#include "pkgc/kge/checkpoint.hpp"
#include "pkgc/runner.hpp"
#include "pkgc/verify_api.hpp"

namespace pkgc {

namespace cli {

namespace fs = std::filesystem;

struct Context {
    ExperimentConfig cfg;
    std::set<std::string> explicit_keys;
};

// Everything a subcommand needs after loading and partitioning the data.
struct Prepared {
    Dataset data;
    Partition part;
    double rho = 0;
    std::uint64_t partition_seed = 0;
};

inline Prepared prepare(const Context& ctx, std::ostream& log) {
    Prepared p;
    p.data = load_dataset(ctx.cfg.dataset);
    p.rho = ctx.cfg.rho;
    p.partition_seed = ctx.cfg.partition_seed;
    if (p.data.rho && !ctx.explicit_keys.contains("rho")) p.rho = *p.data.rho;
    if (p.data.seed && !ctx.explicit_keys.contains("partition-seed")) p.partition_seed = *p.data.seed;
    p.part = partition(p.data.facts, {p.rho, p.partition_seed});
    log << "dataset " << p.data.name << ": " << p.data.vocab.num_entities() << " entities, "
        << p.data.vocab.num_relations() << " relations, " << p.data.facts.size() << " facts; known "
        << p.part.known.size() << ", unexplored " << p.part.unexplored.size() << "\n";
    return p;
}

inline void echo_config(const Context& ctx, const Prepared& p) {
    fs::create_directories(ctx.cfg.out);
    ExperimentConfig eff = ctx.cfg;
    eff.rho = p.rho;
    eff.partition_seed = p.partition_seed;
    std::ofstream out(fs::path(ctx.cfg.out) / "config.txt", std::ios::trunc);
    write_effective_config(out, eff);
}

inline EmbeddingModel<float> pretrain_model(const Context& ctx, const Prepared& p, std::ostream& log) {
    const auto& cfg = ctx.cfg;
    EmbeddingModel<float> model(cfg.model, cfg.dim, p.data.vocab.num_entities(), p.data.vocab.num_relations());
    model.initialize(cfg.seed);
    fs::create_directories(cfg.out);
    std::ofstream train_log(fs::path(cfg.out) / "train_log.csv", std::ios::trunc);
    write_train_log_header(train_log);
    const auto tc = cfg.train_config();
    log << "pretraining " << family_name(cfg.model) << " dim " << cfg.dim << " for up to " << tc.max_epochs
        << " epochs (" << reg_name(tc.reg_kind) << " " << tc.lambda << ")\n";
    pretrain(model, p.part.known, tc, [&](const EpochRecord& r) {
        write_train_log_row(train_log, r);
        train_log.flush();
    });
    const auto path = cfg.checkpoint_path();
    if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
    save_checkpoint(path, model);
    log << "checkpoint written to " << path << "\n";
    return model;
}

inline EmbeddingModel<float> load_model(const Context& ctx, const Prepared& p) {
    const auto path = ctx.cfg.checkpoint_path();
    if (!fs::exists(path)) throw DataError("checkpoint not found: " + path + " (pretrain first or pass --pretrain)");
    auto model = load_checkpoint<float>(path);
    if (model.num_entities() != p.data.vocab.num_entities() || model.num_relations() != p.data.vocab.num_relations())
        throw DataError("checkpoint " + path + " does not match the dataset's entity/relation counts");
    return model;
}

inline std::optional<SemanticValidityFilter> make_svf(const Context& ctx, const Prepared& p) {
    const auto& s = ctx.cfg.svf;
    if (s == "off") return std::nullopt;
    if (s == "auto") {
        if (!p.data.classes) return std::nullopt;
        return build_svf(p.part.known, *p.data.classes, p.data.vocab.num_entities());
    }
    const auto classes = load_class_dict(s, p.data.vocab);
    return build_svf(p.part.known, classes, p.data.vocab.num_entities());
}

inline std::string random_session_id() {
    std::random_device rd;
    char buf[17];
    std::snprintf(buf, sizeof buf, "%08x%08x", rd(), rd());
    return buf;
}

inline int cmd_pretrain(const Context& ctx, std::ostream& log) {
    ctx.cfg.validate();
    const auto p = prepare(ctx, log);
    echo_config(ctx, p);
    pretrain_model(ctx, p, log);
    return 0;
}

inline int cmd_run(const Context& ctx, std::ostream& log) {
    const auto& cfg = ctx.cfg;
    cfg.validate();
    const auto p = prepare(ctx, log);
    echo_config(ctx, p);
    const fs::path out_dir(cfg.out);
    const auto state_dir = (out_dir / "state").string();

    std::optional<RunState> resume;
    EmbeddingModel<float> model;
    if (cfg.resume && fs::exists(fs::path(state_dir) / "run_state.txt")) {
        auto [state, m] = load_run_state<float>(state_dir);
        log << "resuming after step " << state.step << "\n";
        resume = std::move(state);
        model = std::move(m);
    } else {
        model = cfg.pretrain ? pretrain_model(ctx, p, log) : load_model(ctx, p);
    }
    const auto svf = make_svf(ctx, p);
    if (svf) log << "svf: " << svf->num_head_pairs() << " head pairs, " << svf->num_tail_pairs() << " tail pairs\n";

    // Append when resuming so earlier steps' records survive.
    const auto mode = resume ? std::ios::app : std::ios::trunc;
    std::ofstream mining_log(out_dir / "mining_stats.csv", mode);
    std::ofstream update_log(out_dir / "update_log.csv", mode);
    std::ofstream verdict_log(out_dir / "verdicts.jsonl", mode);
    if (!resume) {
        write_mining_stats_header(mining_log);
        update_log << "step,epoch,mean_loss,reg_loss,wall_ms\n";
    }

    std::unique_ptr<VerificationSession> session;
    std::unique_ptr<VerifyApiServer> server;
    if (!cfg.serve.empty()) {
        session = std::make_unique<VerificationSession>(cfg.session_id.empty() ? random_session_id() : cfg.session_id);
        server = std::make_unique<VerifyApiServer>();
        server->add_session(*session);
        const int port = server->start(cfg.serve);
        const auto host = cfg.serve.substr(0, cfg.serve.rfind(':'));
        log << "verify API on http://" << host << ":" << port << "/v1/session/" << session->id() << "/\n";
        std::ofstream(out_dir / "session.txt", std::ios::trunc) << session->id() << "\n" << host << ":" << port << "\n";
    }

    std::unique_ptr<Verifier> verifier;
    if (cfg.verifier == "session")
        verifier = std::make_unique<SessionVerifier>(*session, p.data.vocab,
                                                     std::chrono::milliseconds(cfg.verify_timeout_ms));
    else
        verifier = std::make_unique<OracleVerifier>(p.part.unexplored);

    RunHooks<float> hooks;
    hooks.on_mined = [&](std::size_t step, const MiningStats& s) {
        write_mining_stats(mining_log, step, s);
        mining_log.flush();
    };
    hooks.on_verified = [&](std::size_t step, const VerificationResult& v) {
        write_verdicts(verdict_log, step, v.verdicts);
        log << "step " << step << ": " << v.accepted.size() << " accepted";
        if (!v.timed_out.empty()) log << ", " << v.timed_out.size() << " timed out";
        log << "\n";
    };
    hooks.on_update_epoch = [&](std::size_t step, const EpochRecord& r) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%zu,%zu,%.9g,%.9g,%.3f\n", step, r.epoch, r.mean_loss, r.reg_loss, r.wall_ms);
        update_log << buf;
        update_log.flush();
    };
    hooks.on_curve = [&](const CompletionCurve& c) {
        if (session) session->set_progress(c.rho(), c.points);
    };

    auto loop = cfg.loop_config();
    loop.checkpoint_dir = state_dir;
    const auto result = run(model, p.part, svf ? &*svf : nullptr, cfg.train_config(), cfg.mining_config(), loop,
                            *verifier, hooks, std::move(resume));
    {
        std::ofstream curve(out_dir / "curve.csv", std::ios::trunc);
        write_curve_csv(curve, result.state.curve);
    }
    {
        std::ofstream metrics(out_dir / "metrics.json", std::ios::trunc);
        write_metrics_json(metrics, result.metrics);
    }
    if (server) server->stop();
    if (result.truncated) log << "mining exhausted the candidate space; curve held flat\n";
    if (result.aborted) {
        log << "verification session closed; run aborted\n";
        return 1;
    }
    log << "moar " << result.metrics.moar << ", cr@" << result.metrics.k << " " << result.metrics.cr_at_k << "\n";
    return 0;
}

// One mining pass per toggle combination on the pretrained model. Speedups
// are relative to all toggles off (the plain heap path); outputs must equal
// the unaccelerated pass with the same SVF setting.
inline int cmd_bench_mining(const Context& ctx, std::ostream& log) {
    const auto& cfg = ctx.cfg;
    cfg.validate();
    const auto p = prepare(ctx, log);
    echo_config(ctx, p);
    auto model = fs::exists(cfg.checkpoint_path()) ? load_model(ctx, p) : pretrain_model(ctx, p, log);
    auto svf = make_svf(ctx, p);
    if (!svf) {
        log << "no class dictionary available; svf toggle has no effect\n";
        svf = SemanticValidityFilter(p.part.known, ClassDict(p.data.vocab.num_entities()),
                                     p.data.vocab.num_entities());
    }

    struct Row {
        bool rf, wu, sv;
        double ms;
        std::size_t candidates, survivors;
        std::vector<Candidate> ranked;
    };
    std::vector<Row> rows;
    for (int sv = 0; sv < 2; ++sv)
        for (int wu = 0; wu < 2; ++wu)
            for (int rf = 0; rf < 2; ++rf) {
                MiningConfig mc = cfg.mining_config();
                mc.root_filter = rf;
                mc.warm_up = wu;
                mc.svf = sv;
                auto r = mine(model, p.part.known, &*svf, mc);
                log << "root_filter=" << rf << " warm_up=" << wu << " svf=" << sv << ": " << r.stats.wall_ms
                    << " ms\n";
                rows.push_back({rf != 0, wu != 0, sv != 0, r.stats.wall_ms, r.stats.candidates, r.stats.survivors,
                                std::move(r.ranked)});
            }
    const Row& base = rows.front();  // all off
    std::ofstream out(fs::path(cfg.out) / "bench_mining.csv", std::ios::trunc);
    out << "root_filter,warm_up,svf,wall_ms,speedup,candidates,survivors,identical\n";
    bool all_identical = true;
    for (const auto& r : rows) {
        const Row& ref = r.sv ? rows[4] : rows[0];
        const bool same = r.ranked.size() == ref.ranked.size() &&
                          std::equal(r.ranked.begin(), r.ranked.end(), ref.ranked.begin(),
                                     [](const Candidate& a, const Candidate& b) { return a.key == b.key; });
        all_identical = all_identical && same;
        char buf[200];
        std::snprintf(buf, sizeof buf, "%d,%d,%d,%.3f,%.3f,%zu,%zu,%s\n", r.rf, r.wu, r.sv, r.ms,
                      r.ms > 0 ? base.ms / r.ms : 0.0, r.candidates, r.survivors, same ? "true" : "false");
        out << buf;
    }
    log << "speedup all-on vs all-off: " << (rows.back().ms > 0 ? base.ms / rows.back().ms : 0.0) << "x\n";
    if (!all_identical) {
        log << "accelerated mining changed the candidate set\n";
        return 1;
    }
    return 0;
}

}  // namespace cli

inline int cli_main(int argc, char** argv, std::ostream& log = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Progressive knowledge graph completion"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    std::string config_path;
    std::map<std::string, std::string> values;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "key=value config file (flags override it)");
        for (const auto& k : config_keys()) {
            auto& slot = values[k.name];
            if (k.is_flag)
                sub->add_flag("--" + k.name + "{true}", slot, k.help);
            else
                sub->add_option("--" + k.name, slot, k.help);
        }
    };
    auto* pre = app.add_subcommand("pretrain", "partition the dataset, train, write a checkpoint");
    auto* run = app.add_subcommand("run", "run the progressive completion loop");
    auto* bench = app.add_subcommand("bench-mining", "time mining under every acceleration toggle combination");
    add_common(pre);
    add_common(run);
    add_common(bench);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, log, err);
        return code == 0 ? 0 : 2;
    }

    try {
        cli::Context ctx;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw ConfigError("cannot open config file " + config_path);
            try {
                apply_config_file(ctx.cfg, in, config_path);
            } catch (const ParseError& e) {
                throw ConfigError(e.what());
            }
            // Keys present in the file count as explicit.
            in.clear();
            in.seekg(0);
            std::string line;
            while (std::getline(in, line)) {
                const auto eq = line.find('=');
                if (eq == std::string::npos) continue;
                auto key = line.substr(0, eq);
                key.erase(0, key.find_first_not_of(" \t"));
                key.erase(key.find_last_not_of(" \t") + 1);
                if (find_config_key(key)) ctx.explicit_keys.insert(key);
            }
        }
        CLI::App* sub = app.get_subcommands().front();
        for (const auto& k : config_keys()) {
            if (sub->count("--" + k.name) == 0) continue;
            set_config_value(ctx.cfg, k.name, values[k.name]);
            ctx.explicit_keys.insert(k.name);
        }
        if (sub == pre) return cli::cmd_pretrain(ctx, log);
        if (sub == run) return cli::cmd_run(ctx, log);
        return cli::cmd_bench_mining(ctx, log);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return 3;
    } catch (const DivergenceError& e) {
        err << "training diverged: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace pkgc
