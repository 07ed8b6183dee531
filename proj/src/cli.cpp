#include "rscn/cli.hpp"

#include "rscn/baselines.hpp"
#include "rscn/builder.hpp"
#include "rscn/error.hpp"
#include "rscn/evaluation.hpp"
#include "rscn/online.hpp"
#include "rscn/report.hpp"
#include "rscn/serialization.hpp"
#include "rscn/tasks.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace rscn {

using nlohmann::json;
namespace fs = std::filesystem;

RunManifest RunManifest::from_json(const json& j)
{
    if (!j.is_object()) throw schema_error("run manifest must be a JSON object");
    RunManifest m;
    try {
        m.command = j.value("command", m.command);
        if (j.contains("task")) m.task = j.at("task");
        if (j.contains("model")) m.model = j.at("model");
        if (j.contains("online")) m.online = j.at("online");
        m.out = j.value("out", m.out);
        m.seed = j.value("seed", m.seed);
        m.trials = j.value("trials", m.trials);
        m.grid = j.value("grid", m.grid);
        m.split = j.value("split", m.split);
        m.model_file = j.value("model_file", m.model_file);
    } catch (const json::exception& e) {
        throw schema_error(std::string("malformed run manifest: ") + e.what());
    }
    return m;
}

json RunManifest::to_json() const
{
    json j;
    j["command"] = command;
    j["task"] = task;
    j["model"] = model;
    if (!online.is_null()) j["online"] = online;
    j["out"] = out;
    j["seed"] = seed;
    j["trials"] = trials;
    if (!grid.empty()) j["grid"] = grid;
    j["split"] = split;
    if (!model_file.empty()) j["model_file"] = model_file;
    return j;
}

namespace {

TaskManifest resolve_task(const RunManifest& m)
{
    if (m.task.is_string()) return TaskManifest::from_name(m.task.get<std::string>(), m.seed);
    if (m.task.is_object()) {
        auto t = TaskManifest::from_json(m.task);
        if (!t.doc.contains("seed")) t.doc["seed"] = m.seed;
        return t;
    }
    throw schema_error("no task given (use --task or a manifest 'task' field)");
}

Index baseline_size(const std::string& model, const std::string& task)
{
    static const std::map<std::string, std::map<std::string, Index>> sizes{
        {"esn", {{"MG", 98}, {"MG1", 124}, {"MG2", 135}, {"plant", 157}}},
        {"scr", {{"MG", 79}, {"MG1", 103}, {"MG2", 111}, {"plant", 136}}},
    };
    const auto& per = sizes.at(model);
    const auto it = per.find(task);
    return it == per.end() ? 100 : it->second;
}

template <class T>
void take(const json& j, const char* key, T& dst)
{
    if (j.contains(key)) dst = j.at(key).get<T>();
}

ModelSpec resolve_model(const json& spec, const std::string& task_name, std::uint64_t seed)
{
    const json m = spec.is_null() ? json::object() : spec;
    try {
        const auto type = m.value("type", std::string("rscn"));
        if (type == "rscn") {
            BuildConfig c;
            take(m, "alpha", c.esp_alpha);
            take(m, "n_max", c.n_max);
            take(m, "n", c.n_max);
            take(m, "n_init", c.n_init);
            take(m, "n_step", c.n_step);
            take(m, "g_max", c.g_max);
            take(m, "lambda_sequence", c.lambda_sequence);
            take(m, "r_sequence", c.r_sequence);
            take(m, "epsilon", c.epsilon);
            take(m, "sparsity", c.sparsity);
            take(m, "ridge", c.ridge);
            if (m.contains("esp_mode")) c.esp_mode = parse_esp_mode(m.at("esp_mode").get<std::string>());
            if (m.contains("radius_estimator"))
                c.radius_estimator = parse_radius_estimator(m.at("radius_estimator").get<std::string>());
            if (m.contains("activation"))
                c.activation = parse_activation(m.at("activation").get<std::string>());
            if (m.contains("washout")) c.washout = m.at("washout").get<Index>();
            c.seed = seed;
            return ModelSpec::rscn(c);
        }
        if (type == "esn" || type == "scr") {
            BaselineConfig c;
            c.n_nodes = baseline_size(type, task_name);
            take(m, "n", c.n_nodes);
            take(m, "alpha", c.esp_alpha);
            take(m, "lambda", c.lambda);
            take(m, "sparsity", c.sparsity);
            take(m, "ring_weight", c.ring_weight);
            if (m.contains("scaling"))
                c.scaling = parse_feedback_scaling(m.at("scaling").get<std::string>());
            if (m.contains("activation"))
                c.activation = parse_activation(m.at("activation").get<std::string>());
            c.seed = seed;
            auto s = type == "esn" ? ModelSpec::esn(c) : ModelSpec::scr(c);
            s.ridge = m.value("ridge", 0.0);
            return s;
        }
        throw schema_error("unknown model type '" + type + "'");
    } catch (const json::exception& e) {
        throw schema_error(std::string("malformed model spec: ") + e.what());
    }
}

OnlineConfig resolve_online(const json& spec)
{
    const json o = spec.is_null() ? json::object() : spec;
    OnlineConfig c;
    try {
        if (o.contains("mode")) c.mode = parse_online_mode(o.at("mode").get<std::string>());
        take(o, "a", c.a);
        take(o, "c", c.c);
        if (o.contains("phi")) {
            const auto& p = o.at("phi");
            c.phi = p.is_array() ? p.get<std::vector<double>>() : std::vector<double>{p.get<double>()};
        }
    } catch (const json::exception& e) {
        throw schema_error(std::string("malformed online spec: ") + e.what());
    }
    return c;
}

const SupervisedSequence& pick_split(const TaskSplits& t, const std::string& split)
{
    if (split == "train") return t.train;
    if (split == "validation" || split == "val") return t.validation;
    if (split == "test") return t.test;
    throw schema_error("unknown split '" + split + "'");
}

std::string split_file(const std::string& name)
{
    std::string s = name;
    for (auto& ch : s)
        if (ch == '/') ch = '_';
    return s + ".csv";
}

void write_run(const RunManifest& m)
{
    write_file_atomic(fs::path(m.out) / "run.json", m.to_json().dump(2) + "\n");
}

int cmd_gen(const RunManifest& m, std::ostream& out)
{
    const auto tm = resolve_task(m);
    const auto t = build_task(tm);
    for (const auto* s : {&t.train, &t.validation, &t.test}) {
        const auto path = fs::path(m.out) / split_file(s->name);
        write_file_atomic(path, sequence_to_csv(*s));
        out << "wrote " << path.string() << " rows=" << s->length() << " inputs=" << s->inputs.rows()
            << "\n";
    }
    write_file_atomic(fs::path(m.out) / "task.json", tm.doc.dump(2) + "\n");
    write_run(m);
    return exit_ok;
}

int cmd_train(const RunManifest& m, std::ostream& out)
{
    const auto tm = resolve_task(m);
    const auto t = build_task(tm);
    const auto spec = resolve_model(m.model, tm.name(), m.seed);
    const auto trained = train_model(spec, t);
    const auto model_path = m.model_file.empty() ? fs::path(m.out) / "model.json" : fs::path(m.model_file);
    save_model(trained.model, model_path);
    if (trained.history)
        write_file_atomic(fs::path(m.out) / "history.csv", trained.history->to_csv());
    write_run(m);
    out << "model=" << spec.name << " task=" << tm.name() << " n=" << trained.model.n_nodes()
        << " train_nrmse=" << format_number(evaluate_nrmse(trained.model, t.train))
        << " val_nrmse=" << format_number(evaluate_nrmse(trained.model, t.validation))
        << " file=" << model_path.string() << "\n";
    return exit_ok;
}

ReservoirModel model_for(const RunManifest& m, const TaskManifest& tm, const TaskSplits& t)
{
    if (!m.model_file.empty()) return load_model(m.model_file);
    const auto default_path = fs::path(m.out) / "model.json";
    if (m.model.is_null() && fs::exists(default_path)) return load_model(default_path);
    return train_model(resolve_model(m.model, tm.name(), m.seed), t).model;
}

int cmd_eval(const RunManifest& m, std::ostream& out)
{
    const auto tm = resolve_task(m);
    const auto t = build_task(tm);
    const auto model = model_for(m, tm, t);
    const auto& seq = pick_split(t, m.split);
    const double v = evaluate_nrmse(model, seq);
    out << "task=" << tm.name() << " split=" << m.split << " n=" << model.n_nodes()
        << " nrmse=" << format_number(v) << "\n";
    return exit_ok;
}

int cmd_online(const RunManifest& m, std::ostream& out)
{
    const auto tm = resolve_task(m);
    const auto t = build_task(tm);
    const auto model = model_for(m, tm, t);
    const auto& stream = pick_split(t, m.split);
    const auto cfg = resolve_online(m.online);
    const auto states = run_reservoir(model, stream.inputs);
    const Matrix w_ref = solve_output_weights(trim_washout(states.extended, stream.washout),
                                              trim_washout(stream.targets, stream.washout));
    const auto res = online_run(model, stream, cfg, w_ref);
    const auto path = fs::path(m.out) / "online.csv";
    write_file_atomic(path, online_to_csv(res));
    write_run(m);
    const double v = nrmse(trim_washout(res.predictions, stream.washout),
                           trim_washout(stream.targets, stream.washout));
    const auto& d = res.state.diagnostics;
    out << "task=" << tm.name() << " split=" << m.split << " mode=" << to_string(cfg.mode)
        << " nrmse=" << format_number(v)
        << " initial_gap=" << format_number(d.empty() ? 0.0 : (model.readout - w_ref).norm())
        << " final_gap=" << format_number(d.empty() ? 0.0 : d.back().weight_gap.value_or(0.0))
        << " file=" << path.string() << "\n";
    return exit_ok;
}

std::string trials_csv(const std::vector<TrialReport>& reports)
{
    std::string s = "task,model,seed,ok,n,train_time_s,train_nrmse,val_nrmse,test_nrmse\n";
    for (const auto& r : reports)
        for (const auto& t : r.trials)
            s += r.task_name + "," + r.model_name + "," + std::to_string(t.seed) + ","
                 + (t.ok ? "1" : "0") + "," + std::to_string(t.n_nodes) + ","
                 + format_number(t.train_time_s) + "," + format_number(t.train_nrmse) + ","
                 + format_number(t.val_nrmse) + "," + format_number(t.test_nrmse) + "\n";
    return s;
}

int cmd_bench(const RunManifest& m, std::ostream& out)
{
    std::vector<std::string> tasks{"mg", "mg1", "mg2", "plant"};
    if (m.task.is_string() || m.task.is_object()) tasks = {""};
    const Grid baseline_grid =
        m.grid.empty() ? Grid{{"alpha", {0.5, 0.6, 0.7, 0.8, 0.9, 0.99}}} : parse_grid(m.grid);
    const Index grid_trials = std::min<Index>(m.trials, 5);

    std::vector<TrialReport> all;
    std::string text;
    for (const auto& name : tasks) {
        RunManifest tm_run = m;
        if (!name.empty()) tm_run.task = name;
        const auto tm = resolve_task(tm_run);
        const auto t = build_task(tm);
        std::vector<TrialReport> reports;
        for (const std::string type : {"esn", "scr", "rscn"}) {
            json spec = m.model.is_object() && m.model.value("type", "") == type ? m.model : json::object();
            spec["type"] = type;
            auto ms = resolve_model(spec, tm.name(), m.seed);
            if (type != "rscn") {
                Grid g;
                for (const auto& [key, values] : baseline_grid)
                    g.emplace_back(type == "scr" && key == "alpha" ? "ring_weight" : key, values);
                const auto gs = grid_search(t, ms, g, grid_trials, m.seed);
                for (const auto& [key, v] : gs.best_point().values) ms = ms.with(key, v);
            }
            auto rep = run_trials(t, ms, m.trials, m.seed);
            rep.task_name = tm.name();
            reports.push_back(std::move(rep));
        }
        write_file_atomic(fs::path(m.out) / ("report_" + tm.name() + ".csv"),
                          emit_report(reports, ReportFormat::csv));
        text += tm.name() + "\n" + emit_report(reports, ReportFormat::text) + "\n";
        all.insert(all.end(), reports.begin(), reports.end());
    }
    write_file_atomic(fs::path(m.out) / "report.txt", text);
    write_file_atomic(fs::path(m.out) / "trials.csv", trials_csv(all));
    write_run(m);
    out << text;
    return exit_ok;
}

int cmd_esp_check(const RunManifest& m, std::optional<double> alpha, long steps, std::ostream& out)
{
    const auto path = m.model_file.empty() ? fs::path(m.out) / "model.json" : fs::path(m.model_file);
    auto model = load_model(path);
    if (alpha) model = scale_feedback(model, *alpha, FeedbackScaling::contraction).model;
    auto rng = make_rng(m.seed, "noise");
    Matrix inputs(model.n_inputs(), steps);
    for (Index i = 0; i < inputs.size(); ++i) inputs.data()[i] = uniform_symmetric(rng, 1.0);
    const auto pairs = m.trials;
    const auto r = two_trajectory_check(model, inputs, pairs, 1e-8, derive_seed(m.seed, "init"));
    out << "converged=" << (r.converged ? "true" : "false") << " pairs=" << r.pairs
        << " steps=" << r.steps << " sigma_max=" << format_number(r.sigma_max)
        << " worst_step=" << r.worst_convergence_step
        << " max_final_gap=" << format_number(r.max_final_gap) << "\n";
    return exit_ok;
}

std::string escape(const std::string& s)
{
    std::string o;
    for (char c : s) {
        if (c == '"' || c == '\\') o += '\\';
        if (c == '\n') {
            o += "\\n";
            continue;
        }
        o += c;
    }
    return o;
}

int fail(std::ostream& err, int code, const char* kind, const std::string& msg)
{
    err << "error code=" << code << " kind=" << kind << " message=\"" << escape(msg) << "\"\n";
    return code;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Reservoir construction and benchmarking"};
    app.require_subcommand(1);

    std::string manifest_path, task, model, mode, grid, out_dir, split, model_file, variant;
    std::uint64_t seed = 0;
    long trials = 0, steps = 500;
    double a = 0, c = 0, phi = 0, alpha = 0;

    auto* o_manifest = app.add_option("--manifest", manifest_path, "Run manifest (JSON)");
    auto* o_seed = app.add_option("--seed", seed, "Base seed");
    auto* o_out = app.add_option("--out", out_dir, "Output directory");
    auto* o_trials = app.add_option("--trials", trials, "Trials (bench) or state pairs (esp-check)");
    auto* o_task = app.add_option("--task", task, "mg|mg1|mg2|plant|csv:PATH");
    auto* o_model = app.add_option("--model", model, "rscn|esn|scr");
    auto* o_mode = app.add_option("--mode", mode, "basic|decreasing|deadzone");
    auto* o_a = app.add_option("--a", a, "Projection gain");
    auto* o_c = app.add_option("--c", c, "Projection offset");
    auto* o_phi = app.add_option("--phi", phi, "Dead-zone noise bound");
    auto* o_alpha = app.add_option("--alpha", alpha, "Feedback scaling factor");
    auto* o_grid = app.add_option("--grid", grid, "Grid, e.g. alpha=0.5,0.9;n=50,100");
    auto* o_split = app.add_option("--split", split, "train|validation|test");
    auto* o_file = app.add_option("--model-file", model_file, "Model file");
    auto* o_steps = app.add_option("--steps", steps, "Steps (esp-check)");

    auto* gen = app.add_subcommand("gen", "Write task CSVs");
    std::string gen_name;
    gen->add_option("generator", gen_name, "Task generator (mg, plant)");
    auto* o_variant = gen->add_option("--variant", variant, "mg|mg1|mg2");
    std::vector<CLI::App*> subs{gen,
                                app.add_subcommand("train", "Build a model"),
                                app.add_subcommand("eval", "NRMSE on a split"),
                                app.add_subcommand("online", "Online readout adaptation"),
                                app.add_subcommand("bench", "Comparison tables"),
                                app.add_subcommand("esp-check", "Two-trajectory convergence check")};
    for (auto* s : subs) s->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        return fail(err, exit_usage, "usage", e.what());
    }

    try {
        RunManifest m;
        if (*o_manifest) {
            std::ifstream in(manifest_path);
            if (!in) throw schema_error("cannot open manifest " + manifest_path);
            json j;
            try {
                in >> j;
            } catch (const json::exception& e) {
                throw schema_error("cannot parse manifest: " + std::string(e.what()));
            }
            m = RunManifest::from_json(j);
        }
        m.command = app.get_subcommands().front()->get_name();
        if (*o_seed) m.seed = seed;
        if (*o_out) m.out = out_dir;
        if (*o_trials) m.trials = trials;
        if (*o_task) m.task = task;
        if (m.command == "gen" && !gen_name.empty()) {
            if (gen_name == "mg" && *o_variant) m.task = variant;
            else m.task = gen_name;
        } else if (m.command == "gen" && *o_variant) {
            m.task = variant;
        }
        if (*o_model) {
            if (!m.model.is_object()) m.model = json::object();
            m.model["type"] = model;
        }
        if (*o_alpha) {
            if (!m.model.is_object()) m.model = json::object();
            m.model["alpha"] = alpha;
        }
        if (*o_mode || *o_a || *o_c || *o_phi) {
            if (!m.online.is_object()) m.online = json::object();
            if (*o_mode) m.online["mode"] = mode;
            if (*o_a) m.online["a"] = a;
            if (*o_c) m.online["c"] = c;
            if (*o_phi) m.online["phi"] = phi;
        }
        if (*o_grid) m.grid = grid;
        if (*o_split) m.split = split;
        if (*o_file) m.model_file = model_file;

        if (m.command == "gen") return cmd_gen(m, out);
        if (m.command == "train") return cmd_train(m, out);
        if (m.command == "eval") return cmd_eval(m, out);
        if (m.command == "online") return cmd_online(m, out);
        if (m.command == "bench") return cmd_bench(m, out);
        if (m.command == "esp-check") {
            std::optional<double> al;
            if (*o_alpha) al = alpha;
            else if (m.model.is_object() && m.model.contains("alpha")) al = m.model.at("alpha").get<double>();
            if (!*o_trials && !(*o_manifest)) m.trials = 100;
            return cmd_esp_check(m, al, *o_steps ? steps : 500, out);
        }
        return fail(err, exit_usage, "usage", "unknown command " + m.command);
    } catch (const numeric_overflow& e) {
        return fail(err, exit_numeric, "numeric", e.what());
    } catch (const estimation_failure& e) {
        return fail(err, exit_numeric, "numeric", e.what());
    } catch (const undefined_metric& e) {
        return fail(err, exit_numeric, "metric", e.what());
    } catch (const schema_error& e) {
        return fail(err, exit_data, "schema", e.what());
    } catch (const contract_violation& e) {
        return fail(err, exit_data, "contract", e.what());
    } catch (const fs::filesystem_error& e) {
        return fail(err, exit_data, "io", e.what());
    } catch (const json::exception& e) {
        return fail(err, exit_data, "schema", e.what());
    } catch (const std::exception& e) {
        return fail(err, exit_numeric, "internal", e.what());
    }
}

} // namespace rscn
