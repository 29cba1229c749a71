#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "lavg/common.hpp"
#include "lavg/geometry.hpp"
#include "lavg/grouping.hpp"
#include "lavg/landmarking.hpp"
#include "lavg/rng.hpp"
#include "lavg/sampling.hpp"

namespace lavg {

/// Worker count: LAVG_WORKERS when set, otherwise hardware concurrency.
inline int default_worker_count() {
    if (const char* env = std::getenv("LAVG_WORKERS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(0..n-1) on a pool of `workers` threads. The first exception is
/// rethrown on the calling thread after all workers join.
template <class F>
void parallel_for(long n, int workers, F&& fn) {
    if (n <= 0) return;
    if (workers <= 1 || n == 1) {
        for (long i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<long> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    auto body = [&]() {
        for (;;) {
            const long i = next.fetch_add(1);
            if (i >= n) return;
            {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (first_error) return;
            }
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    const int count = static_cast<int>(std::min<long>(workers, n));
    pool.reserve(count);
    for (int w = 0; w < count; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

/// One point of the sweep grid: a full run configuration minus the seed.
struct SweepTuple {
    nlohmann::json manifold;  // ManifoldModel::to_json form
    double sigma = 0.1;
    StageConstants constants;
    bool perturbation_enabled = true;
    long max_draws = kDefaultMaxDraws;
    std::optional<double> radius1, radius2;
    std::optional<int> batch1, batch2;

    LandmarkConfig config() const {
        LandmarkConfig cfg;
        cfg.sigma = sigma;
        cfg.constants = constants;
        cfg.perturbation_enabled = perturbation_enabled;
        cfg.max_draws = max_draws;
        cfg.radius1 = radius1;
        cfg.radius2 = radius2;
        cfg.batch1 = batch1;
        cfg.batch2 = batch2;
        return cfg;
    }

    nlohmann::json to_json() const {
        nlohmann::json j = {{"manifold", manifold},
                            {"sigma", sigma},
                            {"C2", constants.C2},
                            {"C3", constants.C3},
                            {"C6", constants.C6},
                            {"C7", constants.C7},
                            {"perturbation_enabled", perturbation_enabled},
                            {"max_draws", max_draws}};
        if (radius1) j["radius1"] = *radius1;
        if (radius2) j["radius2"] = *radius2;
        if (batch1) j["batch1"] = *batch1;
        if (batch2) j["batch2"] = *batch2;
        return j;
    }

    static SweepTuple from_json(const nlohmann::json& j) {
        SweepTuple t;
        t.manifold = j.at("manifold");
        t.sigma = j.at("sigma").get<double>();
        if (j.contains("C2")) t.constants.C2 = j["C2"].get<double>();
        if (j.contains("C3")) t.constants.C3 = j["C3"].get<double>();
        if (j.contains("C6")) t.constants.C6 = j["C6"].get<double>();
        if (j.contains("C7")) t.constants.C7 = j["C7"].get<double>();
        if (j.contains("perturbation_enabled"))
            t.perturbation_enabled = j["perturbation_enabled"].get<bool>();
        if (j.contains("max_draws")) t.max_draws = j["max_draws"].get<long>();
        if (j.contains("radius1")) t.radius1 = j["radius1"].get<double>();
        if (j.contains("radius2")) t.radius2 = j["radius2"].get<double>();
        if (j.contains("batch1")) t.batch1 = j["batch1"].get<int>();
        if (j.contains("batch2")) t.batch2 = j["batch2"].get<int>();
        return t;
    }
};

struct SweepPlan {
    std::vector<SweepTuple> grid;
    int replications = 1;
    std::uint64_t base_seed = 1;
    std::string output_path;           // empty: no file, in-memory only
    int workers = 0;                   // 0: default_worker_count()
    std::vector<std::string> metrics;  // empty: record every metric column

    /// Accepts either an explicit "grid" array of tuples or a base tuple plus
    /// "axes": {"sigma": [...], "D": [...]} expanded as a product.
    static SweepPlan from_json(const nlohmann::json& j) {
        SweepPlan plan;
        plan.replications = j.value("replications", 1);
        plan.base_seed = j.value("base_seed", std::uint64_t{1});
        plan.output_path = j.value("output", std::string{});
        plan.workers = j.value("workers", 0);
        if (j.contains("metrics")) plan.metrics = j["metrics"].get<std::vector<std::string>>();
        if (j.contains("grid")) {
            for (const auto& tj : j.at("grid")) plan.grid.push_back(SweepTuple::from_json(tj));
        } else {
            const SweepTuple base = SweepTuple::from_json(j.at("base"));
            std::vector<double> sigmas{base.sigma};
            std::vector<int> dims{base.manifold.at("D").get<int>()};
            if (j.contains("axes")) {
                const auto& axes = j.at("axes");
                if (axes.contains("sigma")) sigmas = axes["sigma"].get<std::vector<double>>();
                if (axes.contains("D")) dims = axes["D"].get<std::vector<int>>();
            }
            for (int D : dims) {
                for (double s : sigmas) {
                    SweepTuple t = base;
                    t.manifold["D"] = D;
                    t.sigma = s;
                    plan.grid.push_back(t);
                }
            }
        }
        return plan;
    }

    /// Fail fast: every tuple must be config-valid before the sweep starts.
    void validate() const {
        if (replications < 1) throw std::invalid_argument("replications must be >= 1");
        for (const auto& t : grid) {
            const ManifoldModel m = ManifoldModel::from_json(t.manifold);
            t.config().validate(m);
        }
    }
};

/// Theoretical Stage-II scale sigma sqrt(d (1 + kappa diam / log D)).
inline double stage2_scale(const ManifoldModel& m, double sigma) {
    const auto c = m.constants();
    const double logD = std::log(static_cast<double>(m.ambient_dim()));
    return sigma * std::sqrt(m.intrinsic_dim() * (1.0 + c.curvature * c.diameter / logD));
}

struct SweepRecord {
    int tuple_index = 0;
    int rep_index = 0;
    std::uint64_t seed = 0;
    nlohmann::json params;
    double d_q0 = 0.0, d_q1 = 0.0, d_q2 = 0.0;
    double noise_avg_norm_1 = 0.0, noise_avg_norm_2 = 0.0;
    double signal_dist_1 = 0.0, signal_dist_2 = 0.0;  // d(signal average, M)
    double theta_norm = 0.0;
    long draws_stage1 = 0, draws_stage2 = 0;
    double scale = 0.0;  // sigma sqrt(d (1 + kappa diam / log D))
    double ratio = 0.0;  // d_q2 / scale
    double runtime_seconds = 0.0;
    std::string error;

    bool ok() const { return error.empty(); }

    /// Runtime is deliberately not serialized: the JSONL output is pledged to
    /// be byte-identical across identical (plan, seed, build) runs.
    nlohmann::json to_json() const {
        return {{"tuple_index", tuple_index},
                {"rep_index", rep_index},
                {"seed", seed},
                {"params", params},
                {"d_q0", d_q0},
                {"d_q1", d_q1},
                {"d_q2", d_q2},
                {"noise_avg_norm_1", noise_avg_norm_1},
                {"noise_avg_norm_2", noise_avg_norm_2},
                {"signal_dist_1", signal_dist_1},
                {"signal_dist_2", signal_dist_2},
                {"theta_norm", theta_norm},
                {"draws_stage1", draws_stage1},
                {"draws_stage2", draws_stage2},
                {"scale", scale},
                {"ratio", ratio},
                {"error", error}};
    }

    static const std::vector<std::string>& metric_names() {
        static const std::vector<std::string> names = {
            "d_q0",          "d_q1",          "d_q2",          "noise_avg_norm_1",
            "noise_avg_norm_2", "signal_dist_1", "signal_dist_2", "theta_norm",
            "draws_stage1",  "draws_stage2",  "scale",         "ratio"};
        return names;
    }

    /// Row with only the requested metric columns (plus the structural keys).
    nlohmann::json to_json_filtered(const std::vector<std::string>& keep) const {
        nlohmann::json j = to_json();
        if (keep.empty()) return j;
        for (const auto& name : metric_names())
            if (std::find(keep.begin(), keep.end(), name) == keep.end()) j.erase(name);
        return j;
    }

    static SweepRecord from_json(const nlohmann::json& j) {
        SweepRecord r;
        r.tuple_index = j.at("tuple_index").get<int>();
        r.rep_index = j.at("rep_index").get<int>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.params = j.value("params", nlohmann::json{});
        r.d_q0 = j.value("d_q0", 0.0);
        r.d_q1 = j.value("d_q1", 0.0);
        r.d_q2 = j.value("d_q2", 0.0);
        r.noise_avg_norm_1 = j.value("noise_avg_norm_1", 0.0);
        r.noise_avg_norm_2 = j.value("noise_avg_norm_2", 0.0);
        r.signal_dist_1 = j.value("signal_dist_1", 0.0);
        r.signal_dist_2 = j.value("signal_dist_2", 0.0);
        r.theta_norm = j.value("theta_norm", 0.0);
        r.draws_stage1 = j.value("draws_stage1", 0L);
        r.draws_stage2 = j.value("draws_stage2", 0L);
        r.scale = j.value("scale", 0.0);
        r.ratio = j.value("ratio", 0.0);
        r.runtime_seconds = j.value("runtime_seconds", 0.0);
        r.error = j.value("error", std::string{});
        return r;
    }
};

/// Seed for run (tuple_index, rep_index): splitmix64 mix of the three values.
inline std::uint64_t derive_run_seed(std::uint64_t base, int tuple_index, int rep_index) {
    return mix_seed(base, static_cast<std::uint64_t>(tuple_index),
                    static_cast<std::uint64_t>(rep_index));
}

inline SweepRecord run_sweep_single(const SweepTuple& tuple, int tuple_index, int rep_index,
                                    std::uint64_t base_seed) {
    SweepRecord rec;
    rec.tuple_index = tuple_index;
    rec.rep_index = rep_index;
    rec.seed = derive_run_seed(base_seed, tuple_index, rep_index);
    rec.params = tuple.to_json();
    const auto start = std::chrono::steady_clock::now();
    try {
        const ManifoldModel m = ManifoldModel::from_json(tuple.manifold);
        SampleStream stream(m, tuple.sigma, rec.seed);
        // The perturbation stream is separate from the sample stream.
        Rng perturb_rng(mix_seed(rec.seed, 0x7e7e7e7eULL, 1));
        const LandmarkResult res = two_round_landmark(stream, tuple.config(), perturb_rng);
        rec.d_q0 = res.dist_q0;
        rec.d_q1 = res.stage1.dist_to_manifold;
        rec.d_q2 = res.stage2.dist_to_manifold;
        rec.noise_avg_norm_1 = norm(res.stage1.noise_average);
        rec.noise_avg_norm_2 = norm(res.stage2.noise_average);
        rec.signal_dist_1 = m.extrinsic_distance(res.stage1.signal_average);
        rec.signal_dist_2 = m.extrinsic_distance(res.stage2.signal_average);
        rec.theta_norm = norm(res.perturbation);
        rec.draws_stage1 = res.stage1.draws;
        rec.draws_stage2 = res.stage2.draws;
        rec.scale = stage2_scale(m, tuple.sigma);
        rec.ratio = rec.d_q2 / rec.scale;
    } catch (const std::exception& e) {
        rec.error = e.what();
    }
    rec.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

inline std::vector<SweepRecord> load_records(const std::string& path) {
    std::vector<SweepRecord> records;
    std::ifstream in(path);
    if (!in) return records;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        records.push_back(SweepRecord::from_json(nlohmann::json::parse(line)));
    }
    return records;
}

/// Executes the plan, appending one JSONL row per run to the output file as
/// soon as it (and everything before it) is done; a re-run skips (tuple, rep)
/// pairs already present, so an interrupted sweep resumes where it stopped.
/// Rows are flushed in job order, so a fresh complete run is byte-identical
/// for identical (plan, seed, build).
inline std::vector<SweepRecord> run_sweep(const SweepPlan& plan) {
    plan.validate();
    std::vector<SweepRecord> existing;
    std::set<std::pair<int, int>> done;
    if (!plan.output_path.empty()) {
        existing = load_records(plan.output_path);
        for (const auto& r : existing) done.insert({r.tuple_index, r.rep_index});
    }
    struct Job {
        int tuple_index;
        int rep_index;
    };
    std::vector<Job> jobs;
    for (int t = 0; t < static_cast<int>(plan.grid.size()); ++t)
        for (int rep = 0; rep < plan.replications; ++rep)
            if (!done.count({t, rep})) jobs.push_back({t, rep});

    std::vector<SweepRecord> fresh(jobs.size());
    std::ofstream out;
    if (!plan.output_path.empty()) {
        out.open(plan.output_path, std::ios::app);
        if (!out) throw std::runtime_error("cannot open sweep output: " + plan.output_path);
    }
    std::mutex write_mutex;
    std::map<std::size_t, const SweepRecord*> pending;
    std::size_t next_to_write = 0;

    const int workers = plan.workers > 0 ? plan.workers : default_worker_count();
    parallel_for(static_cast<long>(jobs.size()), workers, [&](long i) {
        fresh[i] = run_sweep_single(plan.grid[jobs[i].tuple_index], jobs[i].tuple_index,
                                    jobs[i].rep_index, plan.base_seed);
        if (!out.is_open()) return;
        std::lock_guard<std::mutex> lock(write_mutex);
        pending[static_cast<std::size_t>(i)] = &fresh[i];
        while (!pending.empty() && pending.begin()->first == next_to_write) {
            out << pending.begin()->second->to_json_filtered(plan.metrics).dump() << '\n';
            out.flush();
            pending.erase(pending.begin());
            ++next_to_write;
        }
    });

    std::vector<SweepRecord> all = std::move(existing);
    all.insert(all.end(), fresh.begin(), fresh.end());
    std::sort(all.begin(), all.end(), [](const SweepRecord& a, const SweepRecord& b) {
        return std::tie(a.tuple_index, a.rep_index) < std::tie(b.tuple_index, b.rep_index);
    });
    return all;
}

// ---------------------------------------------------------------------------
// Summaries.
// ---------------------------------------------------------------------------

inline double median_of(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double quantile_of(std::vector<double> v, double q) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const double pos = q * (v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - lo) * (v[hi] - v[lo]);
}

struct TupleSummary {
    int tuple_index = 0;
    nlohmann::json params;
    int runs = 0;
    int errors = 0;
    double median_d_q0 = 0.0, median_d_q1 = 0.0, median_d_q2 = 0.0;
    double iqr_d_q2 = 0.0;
    double median_ratio = 0.0;

    nlohmann::json to_json() const {
        return {{"tuple_index", tuple_index}, {"params", params},   {"runs", runs},
                {"errors", errors},           {"median_d_q0", median_d_q0},
                {"median_d_q1", median_d_q1}, {"median_d_q2", median_d_q2},
                {"iqr_d_q2", iqr_d_q2},       {"median_ratio", median_ratio}};
    }
};

struct SweepSummary {
    std::vector<TupleSummary> tuples;
    /// Monotonicity of median d(q2, M) along each axis, where the other
    /// parameters agree; empty when an axis has fewer than two values.
    std::optional<bool> d_q2_nondecreasing_in_sigma;
    std::optional<bool> d_q2_nonincreasing_ratio_spread_in_D;

    nlohmann::json to_json() const {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& t : tuples) arr.push_back(t.to_json());
        nlohmann::json j = {{"tuples", arr}};
        if (d_q2_nondecreasing_in_sigma)
            j["d_q2_nondecreasing_in_sigma"] = *d_q2_nondecreasing_in_sigma;
        return j;
    }
};

inline SweepSummary summarize(const std::vector<SweepRecord>& records) {
    std::map<int, std::vector<const SweepRecord*>> by_tuple;
    for (const auto& r : records) by_tuple[r.tuple_index].push_back(&r);
    SweepSummary summary;
    for (const auto& [idx, rows] : by_tuple) {
        TupleSummary t;
        t.tuple_index = idx;
        t.params = rows.front()->params;
        t.runs = static_cast<int>(rows.size());
        std::vector<double> q0s, q1s, q2s, ratios;
        for (const auto* r : rows) {
            if (!r->ok()) {
                ++t.errors;
                continue;
            }
            q0s.push_back(r->d_q0);
            q1s.push_back(r->d_q1);
            q2s.push_back(r->d_q2);
            ratios.push_back(r->ratio);
        }
        t.median_d_q0 = median_of(q0s);
        t.median_d_q1 = median_of(q1s);
        t.median_d_q2 = median_of(q2s);
        t.iqr_d_q2 = quantile_of(q2s, 0.75) - quantile_of(q2s, 0.25);
        t.median_ratio = median_of(ratios);
        summary.tuples.push_back(std::move(t));
    }
    // Sigma-axis monotonicity among tuples that differ only in sigma.
    std::map<std::string, std::vector<std::pair<double, double>>> sigma_groups;
    for (const auto& t : summary.tuples) {
        nlohmann::json key = t.params;
        key.erase("sigma");
        sigma_groups[key.dump()].push_back({t.params.value("sigma", 0.0), t.median_d_q2});
    }
    bool any_group = false, all_monotone = true;
    for (auto& [key, pts] : sigma_groups) {
        if (pts.size() < 2) continue;
        any_group = true;
        std::sort(pts.begin(), pts.end());
        for (std::size_t i = 1; i < pts.size(); ++i)
            if (pts[i].second < pts[i - 1].second * (1.0 - 1e-9)) all_monotone = false;
    }
    if (any_group) summary.d_q2_nondecreasing_in_sigma = all_monotone;
    return summary;
}

// ---------------------------------------------------------------------------
// Plot data emission. All CSVs start with a '#' header comment documenting
// the columns; row order is deterministic.
// ---------------------------------------------------------------------------

inline void write_h_profile_csv(const GroupingProfile& g, int n_points, std::ostream& out,
                                bool with_convolutions = false) {
    out << "# columns: s, h(s), neg_h_dot(s)";
    if (with_convolutions) out << ", phi_conv_h(s), phi_conv_neg_h_dot(s)";
    out << "\n# D=" << g.D() << " sigma=" << g.sigma() << " R=" << g.R()
        << " s_star=" << g.s_star() << '\n';
    for (int i = 0; i <= n_points; ++i) {
        const double s = g.R() * static_cast<double>(i) / n_points;
        out << s << ',' << g.h(s) << ',' << g.neg_h_dot(s);
        if (with_convolutions) out << ',' << g.phi_conv_h(s) << ',' << g.phi_conv_neg_h_dot(s);
        out << '\n';
    }
}

/// Minimal dependency-free SVG line chart of h and -h' (rescaled to [0,1]).
inline void write_h_profile_svg(const GroupingProfile& g, int n_points, std::ostream& out) {
    const int W = 640, H = 400, pad = 40;
    std::vector<double> ss(n_points + 1), hs(n_points + 1), ds(n_points + 1);
    double dmax = 0.0;
    for (int i = 0; i <= n_points; ++i) {
        ss[i] = g.R() * static_cast<double>(i) / n_points;
        hs[i] = g.h(ss[i]);
        ds[i] = g.neg_h_dot(ss[i]);
        dmax = std::max(dmax, ds[i]);
    }
    auto x_px = [&](double s) { return pad + s / g.R() * (W - 2 * pad); };
    auto y_px = [&](double v) { return H - pad - v * (H - 2 * pad); };
    auto polyline = [&](const std::vector<double>& ys, double yscale, const char* color) {
        std::ostringstream pts;
        for (int i = 0; i <= n_points; ++i)
            pts << x_px(ss[i]) << ',' << y_px(ys[i] / yscale) << ' ';
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\""
            << pts.str() << "\"/>\n";
    };
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<line x1=\"" << pad << "\" y1=\"" << H - pad << "\" x2=\"" << W - pad << "\" y2=\""
        << H - pad << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << pad << "\" y1=\"" << pad << "\" x2=\"" << pad << "\" y2=\"" << H - pad
        << "\" stroke=\"black\"/>\n";
    polyline(hs, 1.0, "#7b2cbf");
    if (dmax > 0.0) polyline(ds, dmax, "#2d6a4f");
    const double xs = x_px(g.s_star());
    out << "<line x1=\"" << xs << "\" y1=\"" << pad << "\" x2=\"" << xs << "\" y2=\"" << H - pad
        << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
    out << "<text x=\"" << xs + 4 << "\" y=\"" << pad + 12 << "\" font-size=\"12\">s*</text>\n";
    out << "<text x=\"" << W - pad - 110 << "\" y=\"" << pad << "\" font-size=\"12\" fill=\"#7b2cbf\">h(s)</text>\n";
    out << "<text x=\"" << W - pad - 110 << "\" y=\"" << pad + 16
        << "\" font-size=\"12\" fill=\"#2d6a4f\">-h'(s) (rescaled)</text>\n";
    out << "</svg>\n";
}

enum class PlotKind { HProfile, ErrorVsStage, ErrorVsD, ErrorVsSigma };

inline void emit_plot_data(const std::vector<SweepRecord>& records, PlotKind kind,
                           std::ostream& out) {
    const SweepSummary summary = summarize(records);
    switch (kind) {
        case PlotKind::HProfile:
            throw std::invalid_argument("h-profile is emitted from a GroupingProfile, not records");
        case PlotKind::ErrorVsStage: {
            out << "# columns: tuple_index, median_d_q0, median_d_q1, median_d_q2\n";
            for (const auto& t : summary.tuples)
                out << t.tuple_index << ',' << t.median_d_q0 << ',' << t.median_d_q1 << ','
                    << t.median_d_q2 << '\n';
            break;
        }
        case PlotKind::ErrorVsD: {
            out << "# columns: D, sigma, median_d_q2, iqr_d_q2, median_ratio\n";
            auto tuples = summary.tuples;
            std::sort(tuples.begin(), tuples.end(), [](const auto& a, const auto& b) {
                return a.params.at("manifold").value("D", 0) < b.params.at("manifold").value("D", 0);
            });
            for (const auto& t : tuples)
                out << t.params.at("manifold").value("D", 0) << ',' << t.params.value("sigma", 0.0)
                    << ',' << t.median_d_q2 << ',' << t.iqr_d_q2 << ',' << t.median_ratio << '\n';
            break;
        }
        case PlotKind::ErrorVsSigma: {
            out << "# columns: sigma, D, median_d_q2, iqr_d_q2, median_ratio\n";
            auto tuples = summary.tuples;
            std::sort(tuples.begin(), tuples.end(), [](const auto& a, const auto& b) {
                return a.params.value("sigma", 0.0) < b.params.value("sigma", 0.0);
            });
            for (const auto& t : tuples)
                out << t.params.value("sigma", 0.0) << ',' << t.params.at("manifold").value("D", 0)
                    << ',' << t.median_d_q2 << ',' << t.iqr_d_q2 << ',' << t.median_ratio << '\n';
            break;
        }
    }
}

}  // namespace lavg
