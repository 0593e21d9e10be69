#include "neuroplan/bench/bench.hpp"

#include "neuroplan/parallel.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <tuple>

namespace neuroplan {

const char* to_string(PlannerKind k) noexcept
{
    switch (k)
    {
    case PlannerKind::MPNetNP:
        return "mpnet_np";
    case PlannerKind::MPNetHP:
        return "mpnet_hp";
    case PlannerKind::RrtStar:
        return "rrt_star";
    case PlannerKind::InformedRrtStar:
        return "informed_rrt_star";
    case PlannerKind::MPNetSMP:
        return "mpnet_smp";
    case PlannerKind::MPNetSMPBi:
        return "mpnet_smp_bi";
    }
    return "?";
}

PlannerKind planner_kind_from_string(const std::string& s)
{
    for (auto k : {PlannerKind::MPNetNP, PlannerKind::MPNetHP, PlannerKind::RrtStar, PlannerKind::InformedRrtStar,
                   PlannerKind::MPNetSMP, PlannerKind::MPNetSMPBi})
        if (s == to_string(k))
            return k;
    throw std::invalid_argument("unknown planner: " + s);
}

bool needs_model(PlannerKind k) noexcept { return k != PlannerKind::RrtStar && k != PlannerKind::InformedRrtStar; }

PlanOutcome run_planner(const PlannerSpec& spec, const MPNetModel* model, const PlanningProblem& problem, Rng& rng,
                        double target_cost)
{
    if (needs_model(spec.kind) && !model)
        throw std::invalid_argument(std::string("planner ") + to_string(spec.kind) + " needs a trained model");
    PlanOutcome out;
    if (spec.kind == PlannerKind::MPNetNP || spec.kind == PlannerKind::MPNetHP)
    {
        PlanConfig cfg = spec.plan;
        cfg.plan_oracle = spec.kind == PlannerKind::MPNetHP;
        PlanResult r = mpnet_path(*model, problem, cfg, rng);
        out.path = std::move(r.path);
        out.stats = r.stats;
        return out;
    }
    RrtOptions opts;
    opts.max_iters = spec.max_iters;
    opts.eta = spec.eta;
    opts.step = spec.plan.steps.fine;
    opts.target_cost = target_cost;
    opts.informed = spec.kind == PlannerKind::InformedRrtStar;
    std::unique_ptr<Sampler> sampler;
    switch (spec.kind)
    {
    case PlannerKind::MPNetSMP:
        sampler = std::make_unique<MPNetSampler>(*model, problem, spec.plan);
        break;
    case PlannerKind::MPNetSMPBi:
        sampler = std::make_unique<BidirectionalMPNetSampler>(*model, problem, spec.plan);
        break;
    default:
        sampler = std::make_unique<UniformSampler>(problem);
    }
    out.path = rrt_star(problem, *sampler, opts, rng).path;
    return out;
}

Clock steady_clock_ms()
{
    return [] {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now().time_since_epoch()).count();
    };
}

namespace {

std::pair<double, double> mean_std(const std::vector<double>& v)
{
    if (v.empty())
        return {0.0, 0.0};
    double mean = 0.0;
    for (double x : v)
        mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v)
        ss += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    return {mean, sd};
}

} // namespace

Metrics aggregate(std::string planner, std::string env, std::string split, std::vector<nlohmann::json> records)
{
    Metrics m;
    m.planner = std::move(planner);
    m.env = std::move(env);
    m.split = std::move(split);
    std::vector<double> times, costs;
    for (const auto& r : records)
    {
        ++m.attempts;
        times.push_back(r.at("wall_ms").get<double>());
        if (r.at("success").get<bool>())
        {
            ++m.successes;
            costs.push_back(r.at("cost").get<double>());
        }
    }
    std::tie(m.t_mean, m.t_std) = mean_std(times);
    if (!costs.empty())
    {
        const auto [c, s] = mean_std(costs);
        m.c_mean = c;
        m.c_std = s;
    }
    m.records = std::move(records);
    return m;
}

Metrics run_bench(const Dataset& ds, const PlannerSpec& spec, const MPNetModel* model, const BenchOptions& opts)
{
    if (needs_model(spec.kind) && !model)
        throw std::invalid_argument(std::string("planner ") + to_string(spec.kind) + " needs a trained model");
    if (opts.trials < 1)
        throw std::invalid_argument("run_bench: trials must be >= 1");
    const std::size_t problems =
        opts.max_problems ? std::min(opts.max_problems, ds.demos.size()) : ds.demos.size();
    const auto trials = static_cast<std::size_t>(opts.trials);
    const Clock clock = opts.clock ? opts.clock : steady_clock_ms();
    std::vector<nlohmann::json> records(problems * trials);

    parallel_for(
        records.size(),
        [&](std::size_t job) {
            const std::size_t i = job / trials;
            const PlanningProblem problem = ds.problem(i);
            double target = 0.0;
            if (i < opts.reference_costs.size() && opts.reference_costs[i])
                target = spec.match_factor * *opts.reference_costs[i];
            const std::uint64_t seed = derive_seed(opts.seed, job);
            Rng rng(seed);
            const double t0 = clock();
            const PlanOutcome r = run_planner(spec, model, problem, rng, target);
            const double t1 = clock();
            const std::string id = std::string(to_string(ds.env)) + "/" + to_string(ds.split) + "/" +
                                   std::to_string(i);
            records[job] = result_record(id, to_string(spec.kind), r.path, r.stats, t1 - t0, seed);
        },
        opts.threads);

    return aggregate(to_string(spec.kind), to_string(ds.env), to_string(ds.split), std::move(records));
}

std::vector<std::optional<double>> costs_by_problem(const Metrics& m, std::size_t problems)
{
    std::vector<std::optional<double>> out(problems);
    if (problems == 0)
        return out;
    const std::size_t trials = m.records.size() / problems;
    if (trials == 0 || m.records.size() % problems != 0)
        throw std::invalid_argument("costs_by_problem: record count is not a multiple of the problem count");
    for (std::size_t i = 0; i < problems; ++i)
    {
        const auto& r = m.records[i * trials];
        if (r.at("success").get<bool>())
            out[i] = r.at("cost").get<double>();
    }
    return out;
}

namespace {

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

} // namespace

std::string report_csv(const std::vector<Metrics>& rows)
{
    std::ostringstream os;
    os << "planner,env,split,success,t_mean,t_std,c_mean,c_std,n\n";
    for (const auto& m : rows)
        os << m.planner << ',' << m.env << ',' << m.split << ',' << fmt(m.success_rate()) << ',' << fmt(m.t_mean)
           << ',' << fmt(m.t_std) << ',' << fmt(m.c_mean) << ',' << fmt(m.c_std) << ',' << m.attempts << '\n';
    return os.str();
}

nlohmann::json report_json(const std::vector<Metrics>& rows)
{
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& m : rows)
        arr.push_back({{"planner", m.planner},
                       {"env", m.env},
                       {"split", m.split},
                       {"success", m.success_rate()},
                       {"successes", m.successes},
                       {"t_mean", m.t_mean},
                       {"t_std", m.t_std},
                       {"c_mean", opt(m.c_mean)},
                       {"c_std", opt(m.c_std)},
                       {"n", m.attempts}});
    return {{"rows", arr}};
}

std::vector<Metrics> metrics_from_json(const nlohmann::json& j)
{
    std::vector<Metrics> out;
    for (const auto& r : j.at("rows"))
    {
        Metrics m;
        m.planner = r.at("planner");
        m.env = r.at("env");
        m.split = r.at("split");
        m.attempts = r.at("n");
        m.successes = r.at("successes");
        m.t_mean = r.at("t_mean");
        m.t_std = r.at("t_std");
        if (!r.at("c_mean").is_null())
            m.c_mean = r.at("c_mean").get<double>();
        if (!r.at("c_std").is_null())
            m.c_std = r.at("c_std").get<double>();
        out.push_back(std::move(m));
    }
    return out;
}

std::filesystem::path emit_report(const std::filesystem::path& dir, const std::vector<Metrics>& rows,
                                  ReportFormat format)
{
    std::filesystem::create_directories(dir);
    const auto file = dir / (format == ReportFormat::Csv ? "report.csv" : "report.json");
    {
        std::ofstream out(file, std::ios::binary | std::ios::trunc);
        out << (format == ReportFormat::Csv ? report_csv(rows) : report_json(rows).dump(2) + "\n");
        if (!out)
            throw std::runtime_error("cannot write " + file.string());
    }
    std::ofstream rec(dir / "records.jsonl", std::ios::binary | std::ios::trunc);
    for (const auto& m : rows)
        for (const auto& r : m.records)
            rec << r.dump() << '\n';
    if (!rec)
        throw std::runtime_error("cannot write " + (dir / "records.jsonl").string());
    return file;
}

} // namespace neuroplan
