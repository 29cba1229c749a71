// Command-line front end: landmarking runs, parameter sweeps, verification
// checks, grouping profiles, pairwise-distance experiments and net building.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lavg/estimators.hpp"
#include "lavg/harness.hpp"
#include "lavg/verify.hpp"

using namespace lavg;
using nlohmann::json;

namespace {

struct ManifoldArgs {
    std::string kind = "sphere";
    int d = 2;
    int D = 128;
    std::vector<double> radii{1.0};

    void attach(CLI::App* cmd) {
        cmd->add_option("--manifold", kind, "manifold kind: sphere | circle | flat_torus")
            ->check(CLI::IsMember({"sphere", "circle", "flat_torus"}));
        cmd->add_option("--d", d, "intrinsic dimension (sphere only)");
        cmd->add_option("--D", D, "ambient dimension");
        cmd->add_option("--radii", radii, "manifold radii (1 value; 2 for flat_torus)");
    }

    ManifoldModel build() const {
        if (kind == "circle") return ManifoldModel::circle(D, radii.at(0));
        if (kind == "flat_torus") return ManifoldModel::flat_torus(D, radii.at(0), radii.at(1));
        return ManifoldModel::sphere(d, D, radii.at(0));
    }
};

struct ConfigArgs {
    double sigma = 0.1;
    double C2 = 1.0, C3 = 1.0, C6 = 1.0, C7 = 1.0;
    std::optional<double> radius1, radius2;
    std::optional<int> batch1, batch2;
    bool no_perturbation = false;
    long max_draws = kDefaultMaxDraws;

    void attach(CLI::App* cmd) {
        cmd->add_option("--sigma", sigma, "per-coordinate noise standard deviation");
        cmd->add_option("--c2", C2, "stage-1 batch-size constant");
        cmd->add_option("--c3", C3, "stage-1 radius constant");
        cmd->add_option("--c6", C6, "stage-2 batch-size constant");
        cmd->add_option("--c7", C7, "stage-2 radius constant");
        cmd->add_option("--r1", radius1, "manual stage-1 radius (default: formula)");
        cmd->add_option("--r2", radius2, "manual stage-2 radius (default: formula)");
        cmd->add_option("--n1", batch1, "manual stage-1 batch size (default: formula)");
        cmd->add_option("--n2", batch2, "manual stage-2 batch size (default: formula)");
        cmd->add_flag("--no-perturbation", no_perturbation, "disable the post-average perturbation");
        cmd->add_option("--max-draws", max_draws, "per-batch draw guard");
    }

    LandmarkConfig build() const {
        LandmarkConfig cfg;
        cfg.sigma = sigma;
        cfg.constants = {C2, C3, C6, C7};
        cfg.radius1 = radius1;
        cfg.radius2 = radius2;
        cfg.batch1 = batch1;
        cfg.batch2 = batch2;
        cfg.perturbation_enabled = !no_perturbation;
        cfg.max_draws = max_draws;
        return cfg;
    }
};

void write_or_print(const std::string& path, const std::string& content) {
    if (path.empty()) {
        std::cout << content << '\n';
        return;
    }
    std::ofstream out(path);
    out << content << '\n';
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    json j;
    in >> j;
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"local-averaging landmarks for manifold denoising"};
    app.require_subcommand(1);

    // ------------------------------------------------------------------ run
    auto* run = app.add_subcommand("run", "one two-round landmarking run");
    ManifoldArgs run_m;
    ConfigArgs run_c;
    std::uint64_t run_seed = 1;
    int rounds = 2;
    std::vector<double> round_radii;
    std::vector<int> round_batches;
    std::string run_out, dump_samples;
    bool run_points = false;
    run_m.attach(run);
    run_c.attach(run);
    run->add_option("--seed", run_seed, "stream seed");
    run->add_option("--rounds", rounds, "2 = two-round; >2 needs --round-radii/--round-batches");
    run->add_option("--round-radii", round_radii, "multi-round radius schedule");
    run->add_option("--round-batches", round_batches, "multi-round batch schedule");
    run->add_option("-o,--out", run_out, "write the result JSON here (default: stdout)");
    run->add_option("--dump-samples", dump_samples, "JSONL dump of accepted samples");
    run->add_flag("--points", run_points, "include full point coordinates in the output");

    // ---------------------------------------------------------------- sweep
    auto* sweep = app.add_subcommand("sweep", "seeded parameter sweep");
    std::string sweep_config, sweep_out, sweep_plot;
    int sweep_workers = 0;
    sweep->add_option("--config", sweep_config, "sweep plan JSON file")->required();
    sweep->add_option("-o,--out", sweep_out, "records JSONL path (overrides plan)");
    sweep->add_option("--workers", sweep_workers, "worker threads (default: LAVG_WORKERS or cores)");
    sweep->add_option("--plot", sweep_plot,
                      "also emit plot CSVs with this prefix (error-vs-stage/D/sigma)");

    // --------------------------------------------------------------- verify
    auto* verify = app.add_subcommand("verify", "numerical verification checks");
    std::string check_name = "all", verify_out;
    std::uint64_t verify_seed = 1;
    double trials_scale = 1.0;
    verify->add_option("--check", check_name, "check name or 'all'");
    verify->add_option("--seed", verify_seed, "seed");
    verify->add_option("--trials", trials_scale, "trial-count multiplier");
    verify->add_option("-o,--out", verify_out, "write the JSON report here");
    bool list_checks = false;
    verify->add_flag("--list", list_checks, "list check names and exit");

    // -------------------------------------------------------------- profile
    auto* profile = app.add_subcommand("profile", "grouping profile tables (h, -h')");
    double prof_sigma = 0.1, prof_R = 0.0, prof_R_sq = 0.0;
    long prof_D = 128;
    int prof_points = 400;
    bool prof_conv = false;
    std::string prof_out, prof_svg;
    profile->add_option("--D", prof_D, "ambient dimension");
    profile->add_option("--sigma", prof_sigma, "noise standard deviation");
    profile->add_option("--R", prof_R, "ball radius");
    profile->add_option("--R2", prof_R_sq, "squared ball radius (default 3 sigma^2 D)");
    profile->add_option("--points", prof_points, "grid points");
    profile->add_flag("--conv", prof_conv, "include phi*h and phi*(-h') columns");
    profile->add_option("-o,--out", prof_out, "CSV path (default: stdout)");
    profile->add_option("--svg", prof_svg, "also write a minimal SVG chart");

    // ------------------------------------------------------------- pairwise
    auto* pairwise = app.add_subcommand("pairwise", "pairwise-distance estimation experiment");
    ManifoldArgs pw_m;
    ConfigArgs pw_c;
    std::uint64_t pw_seed = 1;
    int pw_pairs = 100;
    std::string pw_out;
    pw_m.attach(pairwise);
    pw_c.attach(pairwise);
    pairwise->add_option("--pairs", pw_pairs, "number of pairs");
    pairwise->add_option("--seed", pw_seed, "base seed");
    pairwise->add_option("-o,--out", pw_out, "JSON output path (default: stdout)");

    // ------------------------------------------------------------------ net
    auto* net = app.add_subcommand("net", "greedy landmark net construction");
    ManifoldArgs net_m;
    ConfigArgs net_c;
    std::uint64_t net_seed = 1;
    double separation = 0.5;
    long budget = 1'000'000;
    std::string net_out;
    net_m.attach(net);
    net_c.attach(net);
    net->add_option("--separation", separation, "minimum landmark separation")->required();
    net->add_option("--budget", budget, "total stream draw budget");
    net->add_option("--seed", net_seed, "stream seed");
    net->add_option("-o,--out", net_out, "JSON output path (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            const ManifoldModel m = run_m.build();
            LandmarkConfig cfg = run_c.build();
            cfg.record_batches = !dump_samples.empty();
            SampleStream stream(m, cfg.sigma, run_seed);
            Rng perturb_rng(mix_seed(run_seed, 0x7e7e7e7eULL, 1));
            json out;
            if (rounds == 2 && round_radii.empty()) {
                const LandmarkResult res = two_round_landmark(stream, cfg, perturb_rng);
                out = res.to_json(run_points);
                if (!dump_samples.empty()) {
                    std::ofstream ds(dump_samples);
                    dump_samples_jsonl(ds, res.batch1);
                    dump_samples_jsonl(ds, res.batch2);
                }
            } else {
                cfg.round_radii = round_radii;
                cfg.round_batches = round_batches;
                const auto trajectory = multi_round_landmark(stream, cfg);
                json rounds_json = json::array();
                for (const auto& rec : trajectory) {
                    json rj = {{"dist_to_manifold", rec.dist_to_manifold},
                               {"draws", rec.draws},
                               {"points_assigned", rec.points_assigned}};
                    if (run_points) rj["q"] = rec.q;
                    rounds_json.push_back(rj);
                }
                out = {{"rounds", rounds_json}, {"stream_seed", run_seed}, {"rng", Rng::describe()}};
            }
            out["manifold"] = m.to_json();
            out["config"] = cfg.to_json();
            out["total_draws"] = stream.draws_so_far();
            write_or_print(run_out, out.dump(2));
            return 0;
        }

        if (sweep->parsed()) {
            SweepPlan plan = SweepPlan::from_json(load_json_file(sweep_config));
            if (!sweep_out.empty()) plan.output_path = sweep_out;
            if (sweep_workers > 0) plan.workers = sweep_workers;
            const auto records = run_sweep(plan);
            const auto summary = summarize(records);
            int errored = 0;
            for (const auto& r : records)
                if (!r.ok()) ++errored;
            std::cout << summary.to_json().dump(2) << '\n';
            if (!sweep_plot.empty()) {
                const std::pair<PlotKind, const char*> kinds[] = {
                    {PlotKind::ErrorVsStage, "error-vs-stage"},
                    {PlotKind::ErrorVsD, "error-vs-D"},
                    {PlotKind::ErrorVsSigma, "error-vs-sigma"}};
                for (const auto& [kind, name] : kinds) {
                    std::ofstream out(sweep_plot + "-" + name + ".csv");
                    emit_plot_data(records, kind, out);
                }
            }
            return errored == 0 ? 0 : 1;
        }

        if (verify->parsed()) {
            if (list_checks) {
                for (const auto& name : registered_check_names()) std::cout << name << '\n';
                return 0;
            }
            std::vector<std::string> names;
            if (check_name == "all")
                names = registered_check_names();
            else
                names.push_back(check_name);
            json reports = json::array();
            bool failed = false;
            for (const auto& name : names) {
                const CheckReport report = run_registered_check(name, verify_seed, trials_scale);
                std::cout << report.table_row() << '\n';
                reports.push_back(report.to_json());
                failed = failed || report.outcome == Outcome::Fail;
            }
            if (!verify_out.empty()) {
                std::ofstream out(verify_out);
                out << reports.dump(2) << '\n';
            }
            return failed ? 1 : 0;
        }

        if (profile->parsed()) {
            if (prof_R_sq <= 0.0 && prof_R <= 0.0)
                prof_R_sq = 3.0 * prof_sigma * prof_sigma * static_cast<double>(prof_D);
            const double R = prof_R > 0.0 ? prof_R : std::sqrt(prof_R_sq);
            const GroupingProfile g(R, prof_sigma, prof_D);
            std::ostringstream csv;
            write_h_profile_csv(g, prof_points, csv, prof_conv);
            write_or_print(prof_out, csv.str());
            if (!prof_svg.empty()) {
                std::ofstream svg(prof_svg);
                write_h_profile_svg(g, prof_points, svg);
            }
            return 0;
        }

        if (pairwise->parsed()) {
            const ManifoldModel m = pw_m.build();
            const LandmarkConfig cfg = pw_c.build();
            json rows = json::array();
            int wins = 0;
            for (int k = 0; k < pw_pairs; ++k) {
                SampleStream stream(m, cfg.sigma, mix_seed(pw_seed, k, 0));
                const NoisySample xi = stream.next();
                const NoisySample xj = stream.next();
                const double truth = distance(xi.clean, xj.clean);
                const double raw = distance(xi.observed, xj.observed);
                const double est = estimate_pairwise_distance(stream, xi.observed, xj.observed, cfg);
                if (std::fabs(est - truth) < std::fabs(raw - truth)) ++wins;
                rows.push_back({{"pair", k},
                                {"true_distance", truth},
                                {"raw_distance", raw},
                                {"estimated_distance", est}});
            }
            const json out = {{"manifold", m.to_json()},
                              {"config", cfg.to_json()},
                              {"pairs", rows},
                              {"wins_vs_raw", wins}};
            write_or_print(pw_out, out.dump(2));
            return 0;
        }

        if (net->parsed()) {
            const ManifoldModel m = net_m.build();
            const LandmarkConfig cfg = net_c.build();
            SampleStream stream(m, cfg.sigma, net_seed);
            Rng perturb_rng(mix_seed(net_seed, 0x7e7e7e7eULL, 1));
            const NetSpec spec = build_net(stream, cfg, separation, budget, perturb_rng);
            json out = spec.to_json();
            out["manifold"] = m.to_json();
            out["config"] = cfg.to_json();
            write_or_print(net_out, out.dump(2));
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
