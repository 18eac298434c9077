// killchain_main.cpp — CLI front end: simulate scenarios, learn noise
// models, stream detection, and score threat tuples.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "killchain/killchain.hpp"

namespace {

using namespace killchain;

struct CliConfig {
    std::string rules_path;
    std::string lists_path;
    std::string noise_model_path;
    std::optional<double> tau;
    double tau_base = 2.09;
    std::uint32_t path_thres = 3;
    std::vector<double> weights;
    std::string out_alerts;
    std::string out_hsg;
    std::string format = "json";
    std::vector<int> active_stages;
};

void apply_config_file(CliConfig& c) {
    const char* env = std::getenv("HOLMESLIKE_CONFIG");
    if (!env || !*env) return;
    std::ifstream in(env);
    if (!in) throw std::runtime_error(std::string("cannot open config: ") + env);
    nlohmann::json j = nlohmann::json::parse(in);
    c.rules_path = j.value("rules", c.rules_path);
    c.lists_path = j.value("lists", c.lists_path);
    c.noise_model_path = j.value("noise_model", c.noise_model_path);
    if (j.contains("tau")) c.tau = j["tau"].get<double>();
    c.tau_base = j.value("tau_base", c.tau_base);
    c.path_thres = j.value("path_thres", c.path_thres);
    if (j.contains("weights")) c.weights = j["weights"].get<std::vector<double>>();
    c.out_alerts = j.value("out_alerts", c.out_alerts);
    c.out_hsg = j.value("out_hsg", c.out_hsg);
    c.format = j.value("format", c.format);
    if (j.contains("active_stages"))
        c.active_stages = j["active_stages"].get<std::vector<int>>();
}

std::string slurp(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(std::string("cannot open ") + what + ": " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RuleSet load_rules_from(const CliConfig& c) {
    ConfigLists lists = c.lists_path.empty()
                            ? ConfigLists::parse(default_lists_json())
                            : ConfigLists::parse(slurp(c.lists_path, "lists file"));
    if (c.rules_path.empty()) return RuleSet::load(default_rules_json(), std::move(lists));
    return RuleSet::load(slurp(c.rules_path, "rules file"), std::move(lists));
}

ScoreParams score_params_from(const CliConfig& c) {
    ScoreParams p;
    if (!c.weights.empty()) {
        if (c.weights.size() != 7)
            throw std::runtime_error("--weights needs exactly 7 values");
        for (int i = 0; i < 7; ++i) p.weights[i] = c.weights[i];
    }
    if (!c.active_stages.empty()) {
        p.active_stages.fill(false);
        for (int s : c.active_stages) {
            if (s < 1 || s > 7) throw std::runtime_error("stage index out of range");
            p.active_stages[s - 1] = true;
        }
    }
    p.tau_base = c.tau_base;
    p.tau_override = c.tau;
    return p;
}

std::vector<EventStream> open_streams(const std::vector<std::string>& inputs) {
    std::vector<EventStream> streams;
    for (const auto& path : inputs) {
        if (path == "-") streams.push_back(EventStream::from_stdin());
        else streams.push_back(EventStream::from_file(path));
    }
    if (streams.empty()) streams.push_back(EventStream::from_stdin());
    return streams;
}

int cmd_detect(const CliConfig& c, const std::vector<std::string>& inputs) {
    EngineConfig cfg;
    cfg.score = score_params_from(c);
    cfg.path_thres = c.path_thres;
    if (!c.noise_model_path.empty()) cfg.noise = NoiseModel::load(c.noise_model_path);

    Engine eng(load_rules_from(c), cfg);

    std::ofstream alert_file;
    std::ostream* alerts_out = &std::cout;
    if (!c.out_alerts.empty()) {
        alert_file.open(c.out_alerts);
        if (!alert_file) throw std::runtime_error("cannot write " + c.out_alerts);
        alerts_out = &alert_file;
    }
    eng.set_alert_sink([&](const Alert& a) {
        (*alerts_out) << alert_to_json(a, eng.matches(), eng.rules(), eng.graph()).dump()
                      << "\n";
    });

    auto merged = merge_streams(open_streams(inputs));
    eng.consume_all(merged);

    if (!c.out_hsg.empty()) {
        std::ofstream out(c.out_hsg);
        if (!out) throw std::runtime_error("cannot write " + c.out_hsg);
        std::set<std::uint32_t> alerted;
        for (const Alert& a : eng.alerts()) alerted.insert(a.hsg_id);
        bool first = true;
        if (c.format == "json") out << "[";
        for (auto root : eng.hsg().roots()) {
            if (!alerted.count(eng.hsg().stable_id(root))) continue;
            std::string doc = export_hsg(eng.hsg(), root, eng.matches(), eng.rules(),
                                         eng.graph(), eng.score_params(), c.format);
            if (c.format == "json") out << (first ? "\n" : ",\n") << doc;
            else out << doc;
            first = false;
        }
        if (c.format == "json") out << "\n]\n";
    }

    std::cerr << "events=" << eng.events_consumed()
              << " prov_nodes=" << eng.graph().node_count()
              << " prov_edges=" << eng.graph().edge_count()
              << " matched_ttps=" << eng.matches().active_count()
              << " hsgs=" << eng.hsg().roots().size()
              << " alerts=" << eng.alerts().size() << "\n";
    return eng.alerts().empty() ? 0 : 2;
}

int cmd_learn(const CliConfig& c, const std::vector<std::string>& inputs,
              const std::string& out_path) {
    EngineConfig cfg;
    cfg.score = score_params_from(c);
    cfg.path_thres = c.path_thres;
    cfg.learning = true;
    Engine eng(load_rules_from(c), cfg);

    auto merged = merge_streams(open_streams(inputs));
    eng.consume_all(merged);

    NoiseModel model = eng.take_learned_model();
    std::vector<std::string> ids = inputs;
    model.set_meta(0, ids);
    model.save(out_path);
    std::cout << model.size() << " entries\n";
    return 0;
}

int cmd_score(const CliConfig& c, const std::string& tuple_text) {
    auto tuple = ThreatTuple::parse(tuple_text);
    if (!tuple) throw std::runtime_error("cannot parse tuple: " + tuple_text);
    ScoreParams p = score_params_from(c);
    double score = threat_score(*tuple, p);
    double norm = normalized_score(score, p.active_weight_sum());
    std::cout << "score=" << score << " normalized=" << norm << " tau=" << p.tau()
              << (score >= p.tau() ? " verdict=alert" : " verdict=quiet") << "\n";
    return 0;
}

int cmd_simulate(const std::string& scenario, std::uint64_t seed, std::int64_t start_ts,
                 const std::string& out_path) {
    Scenario sc = gen_scenario(scenario, seed, start_ts);
    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw std::runtime_error("cannot write " + out_path);
        out = &file;
    }
    for (const Event& e : sc.events) (*out) << serialize_event(e) << "\n";
    if (!out_path.empty()) {
        std::ofstream truth(out_path + ".truth.jsonl");
        for (std::size_t i = 0; i < sc.events.size(); ++i) {
            if (sc.stage_of[i] <= 0) continue;
            nlohmann::ordered_json j = {{"seq", sc.events[i].seq},
                                        {"label", "attack"},
                                        {"scenario", sc.name},
                                        {"stage", sc.stage_of[i]}};
            truth << j.dump() << "\n";
        }
    }
    return 0;
}

int cmd_benign(const std::string& host, double rate, std::int64_t duration_us,
               std::uint64_t seed, const std::string& out_path) {
    BenignProfile profile;
    profile.host = host;
    profile.event_rate = rate;
    auto events = gen_benign(profile, duration_us, seed);
    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw std::runtime_error("cannot write " + out_path);
        out = &file;
    }
    for (const Event& e : events) (*out) << serialize_event(e) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"killchain — streaming kill-chain correlation over audit provenance"};
    app.require_subcommand(1);

    CliConfig cfg;
    try {
        apply_config_file(cfg);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--rules", cfg.rules_path, "rules file (JSON)");
        sub->add_option("--lists", cfg.lists_path, "named lists file (JSON)");
        sub->add_option("--path-thres", cfg.path_thres, "path factor bound")
            ->check(CLI::Range(1u, 8u));
        sub->add_option("--weights", cfg.weights, "seven stage weights")->delimiter(',');
        sub->add_option("--tau", cfg.tau, "detection threshold override");
        sub->add_option("--tau-base", cfg.tau_base,
                        "per-stage base of the threshold formula");
        sub->add_option("--active-stages", cfg.active_stages,
                        "stages contributing to the threshold exponent")
            ->delimiter(',');
    };

    std::vector<std::string> inputs;
    auto* detect = app.add_subcommand("detect", "consume streams and raise alerts");
    add_common(detect);
    detect->add_option("inputs", inputs, "event stream files ('-' for stdin)");
    detect->add_option("--noise-model", cfg.noise_model_path, "trained noise model");
    detect->add_option("--out-alerts", cfg.out_alerts, "alert JSONL path");
    detect->add_option("--out-hsg", cfg.out_hsg, "write alerting HSGs here");
    detect->add_option("--format", cfg.format, "hsg export format: dot|json")
        ->check(CLI::IsMember({"dot", "json"}));

    std::string learn_out = "noise_model.json";
    auto* learn = app.add_subcommand("learn", "train a noise model on benign streams");
    add_common(learn);
    learn->add_option("inputs", inputs, "benign stream files");
    learn->add_option("--out", learn_out, "model output path");

    std::string tuple_text;
    auto* score = app.add_subcommand("score", "score a threat tuple like C,M,-,H,-,H,M");
    add_common(score);
    score->add_option("tuple", tuple_text, "seven comma-separated entries")->required();

    std::string sim_name, sim_out;
    std::uint64_t sim_seed = 1;
    std::int64_t sim_start = 1'600'000'000'000'000;
    auto* simulate = app.add_subcommand("simulate", "emit a scripted attack scenario");
    simulate->add_option("scenario", sim_name, "scenario name")->required();
    simulate->add_option("--seed", sim_seed, "generator seed");
    simulate->add_option("--start-ts", sim_start, "first event timestamp (us)");
    simulate->add_option("--out", sim_out, "stream output path (plus .truth.jsonl)");

    std::string ben_host = "h1", ben_out;
    double ben_rate = 20.0;
    std::int64_t ben_dur = 120'000'000;
    std::uint64_t ben_seed = 1;
    auto* benign = app.add_subcommand("benign", "emit benign background activity");
    benign->add_option("--host", ben_host, "host id");
    benign->add_option("--rate", ben_rate, "events per virtual second");
    benign->add_option("--duration", ben_dur, "virtual duration (us)");
    benign->add_option("--seed", ben_seed, "generator seed");
    benign->add_option("--out", ben_out, "stream output path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(detect)) return cmd_detect(cfg, inputs);
        if (app.got_subcommand(learn)) return cmd_learn(cfg, inputs, learn_out);
        if (app.got_subcommand(score)) return cmd_score(cfg, tuple_text);
        if (app.got_subcommand(simulate))
            return cmd_simulate(sim_name, sim_seed, sim_start, sim_out);
        if (app.got_subcommand(benign))
            return cmd_benign(ben_host, ben_rate, ben_dur, ben_seed, ben_out);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 1;
}
