#include "neuroplan/cli.hpp"

#include "neuroplan/bench/bench.hpp"
#include "neuroplan/cspace/json.hpp"
#include "neuroplan/cspace/ops.hpp"
#include "neuroplan/data/dataset.hpp"
#include "neuroplan/learn/continual.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <ostream>
#include <tuple>
#include <sstream>

namespace neuroplan {

namespace fs = std::filesystem;

namespace {

nlohmann::json read_json(const fs::path& file)
{
    std::ifstream in(file);
    if (!in)
        throw std::invalid_argument("cannot read " + file.string());
    try
    {
        return nlohmann::json::parse(in);
    }
    catch (const nlohmann::json::exception& e)
    {
        throw std::invalid_argument(file.string() + ": " + e.what());
    }
}

void write_text(const fs::path& file, const std::string& text)
{
    if (file.has_parent_path())
        fs::create_directories(file.parent_path());
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out)
        throw std::runtime_error("cannot write " + file.string());
}

struct ModelFlags
{
    std::size_t latent = 28;
    std::vector<std::size_t> enet_hidden{256, 128};
    std::vector<std::size_t> pnet_hidden{512, 512, 256, 128};
    double dropout = 0.5;

    void add(CLI::App* app)
    {
        app->add_option("--latent", latent, "latent code size")->capture_default_str();
        app->add_option("--enet-hidden", enet_hidden, "encoder hidden widths")->delimiter(',')->capture_default_str();
        app->add_option("--pnet-hidden", pnet_hidden, "planning-network hidden widths")
            ->delimiter(',')
            ->capture_default_str();
        app->add_option("--dropout", dropout, "planning-network dropout")->capture_default_str();
    }

    [[nodiscard]] ModelOptions options(std::size_t cloud_points) const
    {
        ModelOptions o;
        o.cloud_points = cloud_points;
        o.latent_dim = latent;
        o.enet_hidden = enet_hidden;
        o.pnet_hidden = pnet_hidden;
        o.pnet_dropout = dropout;
        return o;
    }
};

MPNetModel initial_model(const Dataset& ds, const std::string& init, const ModelFlags& flags, std::uint64_t seed)
{
    if (!init.empty())
    {
        MPNetModel m = load_model(init);
        if (!(m.robot == ds.robot) || m.cloud_points() != ds.cloud_points())
            throw std::invalid_argument("model " + init + " does not match the dataset");
        return m;
    }
    if (ds.workspaces.empty())
        throw std::invalid_argument("dataset has no workspaces");
    Rng rng(derive_seed(seed, 0));
    return make_model(ds.robot, ds.workspaces.front().bounds(), flags.options(ds.cloud_points()), rng);
}

// ----- data -----

struct DataGenCmd
{
    std::string env = "simple2d";
    std::string split = "train";
    std::size_t workspaces = 40;
    std::size_t per_workspace = 100;
    int expert_budget = 10000;
    std::size_t cloud_points = 0;
    std::uint64_t seed = 0;
    std::size_t threads = 0;
    std::string out;

    int run(std::ostream& os) const
    {
        DatasetOptions o;
        o.env = env_kind_from_string(env);
        o.split = split_from_string(split);
        o.workspaces = workspaces;
        o.per_workspace = per_workspace;
        o.expert_budget = expert_budget;
        o.cloud_points = cloud_points;
        o.seed = seed;
        o.threads = threads;
        const Dataset ds = generate_dataset(o);
        save_dataset(out, ds);
        os << "wrote " << ds.demos.size() << " demos over " << ds.workspaces.size() << " workspaces to " << out
           << "\n";
        return kExitOk;
    }
};

struct DataProblemCmd
{
    std::string data;
    std::size_t index = 0;
    std::uint64_t seed = 0;
    std::string out;

    int run(std::ostream& os) const
    {
        const Dataset ds = load_dataset(data);
        if (index >= ds.demos.size())
            throw std::invalid_argument("problem index out of range");
        const PlanningProblem p = ds.problem(index);
        nlohmann::json j = {{"robot", robot_to_json(p.robot)},
                            {"workspace", workspace_to_json(p.ws)},
                            {"start", config_to_json(p.c_init)},
                            {"goal", config_to_json(p.c_goal)},
                            {"cloud", p.pc.coords}};
        if (out.empty())
            os << j.dump() << "\n";
        else
            write_text(out, j.dump(2) + "\n");
        return kExitOk;
    }
};

// ----- train -----

struct TrainOfflineCmd
{
    std::string data;
    std::string out;
    std::string init;
    std::string mode = "end_to_end";
    int epochs = 50;
    std::size_t batch = 100;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    ModelFlags model;

    int run(std::ostream& os) const
    {
        const Dataset ds = load_dataset(data);
        MPNetModel m = initial_model(ds, init, model, seed);
        TrainOptions o;
        o.mode = train_mode_from_string(mode);
        o.epochs = epochs;
        o.batch_size = batch;
        o.lr = lr;
        o.seed = derive_seed(seed, 1);
        const TrainResult r = train_offline(m, ds.demos, ds.clouds, o);
        save_model(out, m, seed);
        for (std::size_t e = 0; e < r.loss_curve.size(); ++e)
            os << nlohmann::json{{"epoch", e + 1}, {"loss", r.loss_curve[e]}}.dump() << "\n";
        return kExitOk;
    }
};

struct TrainStreamCmd
{
    bool active = false;
    std::string data;
    std::string out;
    std::string init;
    std::string log;
    std::string policy = "reservoir";
    std::size_t capacity = 10000;
    int replay_period = 100;
    std::size_t replay_batch = 100;
    int n_c = 50;
    double lr = 1e-3;
    std::size_t stream = 0;
    int live_expert = 0;
    std::uint64_t seed = 0;
    ModelFlags model;

    int run(std::ostream& os) const
    {
        const Dataset ds = load_dataset(data);
        MPNetModel m = initial_model(ds, init, model, seed);
        ContinualOptions o;
        o.policy = memory_policy_from_string(policy);
        o.memory_capacity = capacity;
        o.replay_period = replay_period;
        o.replay_batch = replay_batch;
        o.n_c = n_c;
        o.lr = lr;

        const std::size_t n = stream ? std::min(stream, ds.demos.size()) : ds.demos.size();
        std::vector<StreamItem> items;
        for (std::size_t i = 0; i < n; ++i)
            items.push_back({ds.problem(i), ds.demos[i].workspace});

        Expert expert;
        if (live_expert > 0)
            expert = [budget = live_expert](const PlanningProblem& p, Rng& rng) { return gen_demo(p, budget, rng); };
        else
            expert = [&](const PlanningProblem& p, Rng&) -> std::optional<Path> {
                for (std::size_t i = 0; i < n; ++i)
                {
                    const Path& d = ds.demos[i].path;
                    if (d.front() == p.c_init && d.end_state() == p.c_goal &&
                        ds.workspaces[ds.demos[i].workspace] == p.ws)
                        return d;
                }
                return std::nullopt;
            };

        Learner learner(m, o);
        EpisodicMemory mem(capacity);
        ReplayBuffer buf;
        buf.period = replay_period;
        buf.batch_size = replay_batch;
        Rng rng(derive_seed(seed, 2));
        PlanConfig plan;
        plan.plan_oracle = false;
        const LoopResult r = active ? active_continual_loop(learner, items, ds.clouds, expert, plan, mem, buf, rng)
                                    : continual_loop(learner, items, ds.clouds, expert, mem, buf, rng);
        save_model(out, m, seed);
        if (!log.empty())
        {
            std::ostringstream ss;
            write_log(ss, r.log);
            write_text(log, ss.str());
        }
        os << nlohmann::json{{"stream", n},
                             {"demo_count", r.demo_count},
                             {"expert_failures", r.expert_failures},
                             {"model_solved", r.model_solved}}
                  .dump()
           << "\n";
        return kExitOk;
    }
};

// ----- plan -----

struct PlanCmd
{
    std::string problem;
    std::string model;
    std::string planner = "mpnet_np";
    bool oracle = false;
    int iters = 10000;
    std::uint64_t seed = 0;
    std::string out;

    int run(std::ostream& os) const
    {
        PlannerSpec spec;
        spec.kind = oracle ? PlannerKind::MPNetHP : planner_kind_from_string(planner);
        spec.max_iters = iters;
        if (iters < 1)
            throw std::invalid_argument("--iters must be >= 1");

        const nlohmann::json j = read_json(problem);
        PlanningProblem p;
        std::optional<MPNetModel> m;
        try
        {
            p.robot = robot_from_json(j.at("robot"));
            p.ws = workspace_from_json(j.at("workspace"));
            p.c_init = config_from_json(p.robot, j.at("start"));
            p.c_goal = config_from_json(p.robot, j.at("goal"));
        }
        catch (const nlohmann::json::exception& e)
        {
            throw std::invalid_argument(problem + ": " + e.what());
        }
        if (needs_model(spec.kind))
        {
            if (model.empty())
                throw std::invalid_argument(std::string("planner ") + to_string(spec.kind) + " needs --model");
            m = load_model(model);
            if (!(m->robot == p.robot))
                throw std::invalid_argument("model robot does not match the problem");
        }
        const std::size_t points = m ? m->cloud_points() : default_cloud_size(p.ws.dim());
        if (j.contains("cloud"))
            p.pc = {p.ws.dim(), j.at("cloud").get<std::vector<double>>()};
        else
            p.pc = make_point_cloud(p.ws, points, j.value("cloud_seed", std::uint64_t{0}));
        if (p.pc.num_points() != points || p.pc.coords.size() != points * p.ws.dim())
            throw std::invalid_argument("point cloud size does not match the model");

        Rng rng(seed);
        const Clock clock = steady_clock_ms();
        const double t0 = clock();
        const PlanOutcome r = run_planner(spec, m ? &*m : nullptr, p, rng);
        const double t1 = clock();
        const std::string id = fs::path(problem).stem().string();
        const nlohmann::json rec = result_record(id, to_string(spec.kind), r.path, r.stats, t1 - t0, seed);
        if (out.empty())
            os << rec.dump() << "\n";
        else
            write_text(out, rec.dump(2) + "\n");
        return r.path ? kExitOk : kExitPlanFailed;
    }
};

// ----- bench / report -----

struct BenchCmd
{
    std::string data;
    std::vector<std::string> planners;
    std::string model;
    int trials = 1;
    int iters = 10000;
    std::size_t max_problems = 0;
    bool match = false;
    std::uint64_t seed = 0;
    std::string out;

    int run(std::ostream& os) const
    {
        const Dataset ds = load_dataset(data);
        std::optional<MPNetModel> m;
        if (!model.empty())
            m = load_model(model);
        if (m && (!(m->robot == ds.robot) || m->cloud_points() != ds.cloud_points()))
            throw std::invalid_argument("model " + model + " does not match the dataset");

        BenchOptions o;
        o.trials = trials;
        o.seed = seed;
        o.max_problems = max_problems;
        if (match)
        {
            if (!m)
                throw std::invalid_argument("--match needs --model");
            PlannerSpec ref;
            ref.kind = PlannerKind::MPNetNP;
            const Metrics r = run_bench(ds, ref, &*m, o);
            const std::size_t n = r.records.size() / static_cast<std::size_t>(trials);
            o.reference_costs = costs_by_problem(r, n);
        }

        std::vector<Metrics> rows;
        for (const auto& name : planners)
        {
            PlannerSpec spec;
            spec.kind = planner_kind_from_string(name);
            spec.max_iters = iters;
            if (needs_model(spec.kind) && !m)
                throw std::invalid_argument("planner " + name + " needs --model");
            rows.push_back(run_bench(ds, spec, m ? &*m : nullptr, o));
        }
        emit_report(out, rows, ReportFormat::Json);
        emit_report(out, rows, ReportFormat::Csv);
        os << report_csv(rows);
        return kExitOk;
    }
};

struct ReportCmd
{
    std::vector<std::string> inputs;
    std::string format = "csv";
    std::string out;
    std::uint64_t seed = 0;

    int run(std::ostream& os) const
    {
        std::vector<Metrics> rows;
        for (const auto& in : inputs)
        {
            const fs::path file = fs::is_directory(in) ? fs::path(in) / "report.json" : fs::path(in);
            try
            {
                for (auto& r : metrics_from_json(read_json(file)))
                    rows.push_back(std::move(r));
            }
            catch (const nlohmann::json::exception& e)
            {
                throw std::invalid_argument(file.string() + ": " + e.what());
            }
        }
        const std::string text = format == "csv" ? report_csv(rows) : report_json(rows).dump(2) + "\n";
        if (out.empty())
            os << text;
        else
            write_text(fs::path(out) / (format == "csv" ? "report.csv" : "report.json"), text);
        return kExitOk;
    }
};

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Neural motion planning toolkit", "neuroplan"};
    app.require_subcommand(1);

    auto* data = app.add_subcommand("data", "dataset generation");
    data->require_subcommand(1);
    DataGenCmd gen;
    auto* gen_app = data->add_subcommand("gen", "generate a dataset of expert demonstrations");
    gen_app->add_option("--env", gen.env, "simple2d, complex2d, complex3d or rigid_se2")
        ->check(CLI::IsMember({"simple2d", "complex2d", "complex3d", "rigid_se2"}))
        ->capture_default_str();
    gen_app->add_option("--split", gen.split, "train, seen or unseen")
        ->check(CLI::IsMember({"train", "seen", "unseen"}))
        ->capture_default_str();
    gen_app->add_option("--workspaces", gen.workspaces)->capture_default_str();
    gen_app->add_option("--per-workspace", gen.per_workspace)->capture_default_str();
    gen_app->add_option("--expert-budget", gen.expert_budget, "RRT* iterations per demo")->capture_default_str();
    gen_app->add_option("--cloud-points", gen.cloud_points, "0 selects the default")->capture_default_str();
    gen_app->add_option("--threads", gen.threads, "0 uses NEUROPLAN_THREADS or all cores")->capture_default_str();
    gen_app->add_option("--seed", gen.seed)->capture_default_str();
    gen_app->add_option("--out", gen.out, "output directory")->required();

    DataProblemCmd prob;
    auto* prob_app = data->add_subcommand("problem", "export one dataset problem as JSON");
    prob_app->add_option("--data", prob.data)->required();
    prob_app->add_option("--index", prob.index)->capture_default_str();
    prob_app->add_option("--seed", prob.seed)->capture_default_str();
    prob_app->add_option("--out", prob.out, "output file (stdout when omitted)");

    auto* train = app.add_subcommand("train", "model training");
    train->require_subcommand(1);
    TrainOfflineCmd offline;
    auto* off_app = train->add_subcommand("offline", "batch training on a dataset");
    off_app->add_option("--data", offline.data)->required();
    off_app->add_option("--out", offline.out, "model directory")->required();
    off_app->add_option("--init", offline.init, "start from this model");
    off_app->add_option("--mode", offline.mode)
        ->check(CLI::IsMember({"end_to_end", "separate"}))
        ->capture_default_str();
    off_app->add_option("--epochs", offline.epochs)->capture_default_str();
    off_app->add_option("--batch", offline.batch)->capture_default_str();
    off_app->add_option("--lr", offline.lr)->capture_default_str();
    off_app->add_option("--seed", offline.seed)->capture_default_str();
    offline.model.add(off_app);

    TrainStreamCmd cont;
    TrainStreamCmd act;
    act.active = true;
    for (auto [cmd, name, help] : {std::tuple{&cont, "continual", "continual learning over a demo stream"},
                                   std::tuple{&act, "active", "active continual learning over a problem stream"}})
    {
        auto* s = train->add_subcommand(name, help);
        s->add_option("--data", cmd->data, "dataset whose problems form the stream")->required();
        s->add_option("--out", cmd->out, "model directory")->required();
        s->add_option("--init", cmd->init, "start from this model");
        s->add_option("--log", cmd->log, "JSON-lines training log");
        s->add_option("--policy", cmd->policy)
            ->check(CLI::IsMember({"reservoir", "surprise", "reward", "coverage_knn"}))
            ->capture_default_str();
        s->add_option("--capacity", cmd->capacity, "episodic memory size")->capture_default_str();
        s->add_option("--replay-period", cmd->replay_period)->capture_default_str();
        s->add_option("--replay-batch", cmd->replay_batch)->capture_default_str();
        s->add_option("--lr", cmd->lr)->capture_default_str();
        s->add_option("--stream", cmd->stream, "number of problems (0 = all)")->capture_default_str();
        s->add_option("--live-expert", cmd->live_expert,
                      "run RRT* with this budget instead of replaying the stored demos")
            ->capture_default_str();
        s->add_option("--seed", cmd->seed)->capture_default_str();
        if (cmd->active)
            s->add_option("--n-c", cmd->n_c, "problems always sent to the expert")->capture_default_str();
        cmd->model.add(s);
    }

    PlanCmd plan;
    auto* plan_app = app.add_subcommand("plan", "solve one problem");
    plan_app->add_option("--problem", plan.problem, "problem JSON")->required();
    plan_app->add_option("--model", plan.model, "model directory");
    plan_app->add_option("--planner", plan.planner)->capture_default_str();
    plan_app->add_flag("--oracle", plan.oracle, "hybrid planning with the RRT* fallback");
    plan_app->add_option("--iters", plan.iters, "iteration cap for the RRT* family")->capture_default_str();
    plan_app->add_option("--seed", plan.seed)->capture_default_str();
    plan_app->add_option("--out", plan.out, "output file (stdout when omitted)");

    BenchCmd bench;
    auto* bench_app = app.add_subcommand("bench", "run planners over a dataset");
    bench_app->add_option("--data", bench.data)->required();
    bench_app->add_option("--planner", bench.planners, "planner name, repeatable")->required();
    bench_app->add_option("--model", bench.model, "model directory");
    bench_app->add_option("--trials", bench.trials)->capture_default_str();
    bench_app->add_option("--iters", bench.iters, "iteration cap for the RRT* family")->capture_default_str();
    bench_app->add_option("--max-problems", bench.max_problems, "0 = all")->capture_default_str();
    bench_app->add_flag("--match", bench.match, "stop the RRT* family within 5% of the neural planner's cost");
    bench_app->add_option("--seed", bench.seed)->capture_default_str();
    bench_app->add_option("--out", bench.out, "report directory")->required();

    ReportCmd report;
    auto* report_app = app.add_subcommand("report", "merge bench reports");
    report_app->add_option("--in", report.inputs, "bench directories or report.json files")->required();
    report_app->add_option("--format", report.format)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    report_app->add_option("--out", report.out, "output directory (stdout when omitted)");
    report_app->add_option("--seed", report.seed)->capture_default_str();

    try
    {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    }
    catch (const CLI::CallForHelp&)
    {
        out << app.help();
        return kExitOk;
    }
    catch (const CLI::CallForAllHelp&)
    {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    }
    catch (const CLI::ParseError& e)
    {
        err << e.what() << "\n" << app.help();
        return kExitUsage;
    }

    try
    {
        if (gen_app->parsed())
            return gen.run(out);
        if (prob_app->parsed())
            return prob.run(out);
        if (off_app->parsed())
            return offline.run(out);
        if (train->get_subcommand("continual")->parsed())
            return cont.run(out);
        if (train->get_subcommand("active")->parsed())
            return act.run(out);
        if (plan_app->parsed())
            return plan.run(out);
        if (bench_app->parsed())
            return bench.run(out);
        if (report_app->parsed())
            return report.run(out);
    }
    catch (const std::exception& e)
    {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    err << app.help();
    return kExitUsage;
}

} // namespace neuroplan
