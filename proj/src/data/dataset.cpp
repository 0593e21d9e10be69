#include "neuroplan/data/dataset.hpp"

#include "neuroplan/cspace/json.hpp"
#include "neuroplan/parallel.hpp"
#include "neuroplan/planner/mpnet.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace neuroplan {

static_assert(std::endian::native == std::endian::little, "dataset blocks are written in host order");

namespace {

constexpr double kBoundHalf = 20.0;
constexpr double kObstacleHalf = 2.5;
constexpr double kMinGap = 1.0;
constexpr int kPlacementTries = 10000;
constexpr int kProblemTriesPerDemo = 50;

} // namespace

const char* to_string(EnvKind e) noexcept
{
    switch (e)
    {
    case EnvKind::Simple2D:
        return "simple2d";
    case EnvKind::Complex2D:
        return "complex2d";
    case EnvKind::Complex3D:
        return "complex3d";
    case EnvKind::RigidSE2:
        return "rigid_se2";
    }
    return "?";
}

EnvKind env_kind_from_string(const std::string& s)
{
    for (auto e : {EnvKind::Simple2D, EnvKind::Complex2D, EnvKind::Complex3D, EnvKind::RigidSE2})
        if (s == to_string(e))
            return e;
    throw std::invalid_argument("unknown environment: " + s);
}

const char* to_string(Split s) noexcept
{
    switch (s)
    {
    case Split::Train:
        return "train";
    case Split::Seen:
        return "seen";
    case Split::Unseen:
        return "unseen";
    }
    return "?";
}

Split split_from_string(const std::string& s)
{
    for (auto v : {Split::Train, Split::Seen, Split::Unseen})
        if (s == to_string(v))
            return v;
    throw std::invalid_argument("unknown split: " + s);
}

RobotModel robot_for(EnvKind env)
{
    switch (env)
    {
    case EnvKind::Complex3D:
        return RobotModel::point3d();
    case EnvKind::RigidSE2:
        return RobotModel::rigid_se2({{-1.0, -0.5}, {1.0, -0.5}, {1.0, 0.5}, {-1.0, 0.5}});
    default:
        return RobotModel::point2d();
    }
}

std::size_t obstacle_count(EnvKind env) noexcept { return env == EnvKind::Simple2D ? 7 : 10; }

Workspace gen_workspace(EnvKind env, std::uint64_t seed)
{
    const std::size_t m = env == EnvKind::Complex3D ? 3 : 2;
    Box bounds;
    bounds.dim = m;
    for (std::size_t a = 0; a < m; ++a)
    {
        bounds.lo[a] = -kBoundHalf;
        bounds.hi[a] = kBoundHalf;
    }
    Rng rng(seed);
    std::vector<Box> obstacles;
    const std::array<double, 3> half{kObstacleHalf, kObstacleHalf, kObstacleHalf};
    const std::size_t want = obstacle_count(env);
    int tries = 0;
    while (obstacles.size() < want)
    {
        if (++tries > kPlacementTries)
            throw std::runtime_error("gen_workspace: obstacle placement failed");
        std::array<double, 3> center{};
        for (std::size_t a = 0; a < m; ++a)
            center[a] = uniform(rng, -kBoundHalf + kObstacleHalf, kBoundHalf - kObstacleHalf);
        const Box b = Box::from_center(std::span(center.data(), m), std::span(half.data(), m));
        Box grown = b;
        for (std::size_t a = 0; a < m; ++a)
        {
            grown.lo[a] -= kMinGap;
            grown.hi[a] += kMinGap;
        }
        if (std::none_of(obstacles.begin(), obstacles.end(), [&](const Box& o) { return grown.intersects(o); }))
            obstacles.push_back(b);
    }
    return Workspace(bounds, std::move(obstacles));
}

std::vector<Workspace> gen_workspaces(EnvKind env, std::size_t count, std::uint64_t seed)
{
    if (count < 1)
        throw std::invalid_argument("gen_workspaces: count must be >= 1");
    std::vector<Workspace> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        out.push_back(gen_workspace(env, derive_seed(seed, i)));
    return out;
}

PlanningProblem sample_problem(const RobotModel& robot, const Workspace& ws, const PointCloud& pc, Rng& rng,
                               double min_separation)
{
    PlanningProblem p;
    p.robot = robot;
    p.ws = ws;
    p.pc = pc;
    for (int k = 0; k < 10000; ++k)
    {
        p.c_init = sample_free(robot, ws, rng);
        p.c_goal = sample_free(robot, ws, rng);
        if (distance(p.c_init, p.c_goal) >= min_separation)
            return p;
    }
    throw std::runtime_error("sample_problem: no start/goal pair with the requested separation");
}

std::optional<Path> gen_demo(const PlanningProblem& problem, int expert_budget, Rng& rng, double step)
{
    UniformSampler sampler(problem);
    RrtOptions opts;
    opts.max_iters = expert_budget;
    opts.step = step;
    auto res = rrt_star(problem, sampler, opts, rng);
    if (!res.path)
        return std::nullopt;
    Path p = lsc(*res.path, problem.robot, problem.ws, step);
    if (!path_feasible(problem.robot, p, problem.ws, step))
        return std::nullopt;
    return p;
}

PlanningProblem Dataset::problem(std::size_t demo) const
{
    const Demo& d = demos.at(demo);
    PlanningProblem p;
    p.robot = robot;
    p.ws = workspaces.at(d.workspace);
    p.pc = clouds.at(d.workspace);
    p.c_init = d.path.front();
    p.c_goal = d.path.end_state();
    return p;
}

std::vector<TrainingSample> Dataset::training_samples() const
{
    std::vector<TrainingSample> out;
    for (const auto& d : demos)
    {
        auto pairs = one_step_pairs(d.path, d.workspace);
        out.insert(out.end(), pairs.begin(), pairs.end());
    }
    return out;
}

Dataset generate_dataset(const DatasetOptions& opts)
{
    if (opts.workspaces < 1 || opts.per_workspace < 1 || opts.expert_budget < 1)
        throw std::invalid_argument("generate_dataset: counts and budget must be >= 1");
    Dataset ds;
    ds.env = opts.env;
    ds.split = opts.split;
    ds.seed = opts.seed;
    ds.robot = robot_for(opts.env);
    const std::uint64_t offset = opts.split == Split::Unseen ? kUnseenWorkspaceOffset : 0;
    const std::uint64_t stream = static_cast<std::uint64_t>(opts.split) + 1;
    const std::size_t n = opts.workspaces;
    ds.workspace_seeds.resize(n);
    ds.workspaces.resize(n);
    ds.clouds.resize(n);
    std::vector<std::vector<Demo>> per(n);

    parallel_for(
        n,
        [&](std::size_t i) {
            const std::uint64_t wseed = derive_seed(opts.seed, offset + i);
            const Workspace ws = gen_workspace(opts.env, wseed);
            const std::size_t np = opts.cloud_points ? opts.cloud_points : default_cloud_size(ws.dim());
            PointCloud pc = make_point_cloud(ws, np, wseed);
            Rng rng(derive_seed(wseed, stream));
            std::size_t attempts = 0;
            while (per[i].size() < opts.per_workspace)
            {
                if (++attempts > kProblemTriesPerDemo * opts.per_workspace)
                    throw std::runtime_error("generate_dataset: expert failed too often");
                const PlanningProblem p = sample_problem(ds.robot, ws, pc, rng, opts.min_separation);
                if (auto demo = gen_demo(p, opts.expert_budget, rng))
                    per[i].push_back({i, std::move(*demo)});
            }
            ds.workspace_seeds[i] = wseed;
            ds.workspaces[i] = ws;
            ds.clouds[i] = std::move(pc);
        },
        opts.threads);

    for (auto& v : per)
        for (auto& d : v)
            ds.demos.push_back(std::move(d));
    return ds;
}

namespace {

std::uint32_t crc_of(const std::string& bytes)
{
    return static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

template <typename T>
std::string pack(const std::vector<T>& v)
{
    std::string out(v.size() * sizeof(T), '\0');
    if (!v.empty())
        std::memcpy(out.data(), v.data(), out.size());
    return out;
}

template <typename T>
std::vector<T> unpack(const std::string& bytes, const char* name)
{
    if (bytes.size() % sizeof(T) != 0)
        throw DatasetError(std::string("dataset block ") + name + " has a truncated element");
    std::vector<T> out(bytes.size() / sizeof(T));
    if (!out.empty())
        std::memcpy(out.data(), bytes.data(), bytes.size());
    return out;
}

void write_file(const std::filesystem::path& file, const std::string& bytes)
{
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw std::runtime_error("cannot write " + file.string());
}

std::string read_file(const std::filesystem::path& file)
{
    std::ifstream in(file, std::ios::binary);
    if (!in)
        throw DatasetError("cannot read " + file.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

void save_dataset(const std::filesystem::path& dir, const Dataset& ds)
{
    const std::size_t m = ds.robot.workspace_dim();
    const std::size_t d = ds.robot.dof();
    std::filesystem::create_directories(dir);

    nlohmann::json wsj = nlohmann::json::array();
    std::vector<double> boxes;
    auto put_box = [&](const Box& b) {
        boxes.insert(boxes.end(), b.lo.begin(), b.lo.begin() + static_cast<std::ptrdiff_t>(m));
        boxes.insert(boxes.end(), b.hi.begin(), b.hi.begin() + static_cast<std::ptrdiff_t>(m));
    };
    for (const auto& w : ds.workspaces)
    {
        wsj.push_back(workspace_to_json(w));
        put_box(w.bounds());
        for (const auto& o : w.obstacles())
            put_box(o);
    }

    std::vector<double> clouds;
    for (const auto& c : ds.clouds)
    {
        if (c.dim != m || c.num_points() != ds.cloud_points())
            throw std::invalid_argument("save_dataset: inconsistent point clouds");
        clouds.insert(clouds.end(), c.coords.begin(), c.coords.end());
    }
    std::vector<double> paths;
    std::vector<std::uint64_t> index;
    for (const auto& demo : ds.demos)
    {
        index.push_back(demo.workspace);
        index.push_back(demo.path.size());
        for (const auto& s : demo.path.states)
        {
            if (s.dim() != d)
                throw std::invalid_argument("save_dataset: path state dimension mismatch");
            paths.insert(paths.end(), s.coords().begin(), s.coords().end());
        }
    }

    const std::vector<std::pair<std::string, std::string>> blocks = {
        {"workspaces.json", wsj.dump(1) + "\n"},
        {"boxes.f64", pack(boxes)},
        {"clouds.f64", pack(clouds)},
        {"paths.f64", pack(paths)},
        {"demos.u64", pack(index)},
    };
    nlohmann::json manifest = {{"format", "neuroplan-dataset"},
                               {"version", kDatasetVersion},
                               {"env", to_string(ds.env)},
                               {"split", to_string(ds.split)},
                               {"seed", ds.seed},
                               {"robot", robot_to_json(ds.robot)},
                               {"workspace_dim", m},
                               {"cspace_dim", d},
                               {"cloud_points", ds.cloud_points()},
                               {"workspace_count", ds.workspaces.size()},
                               {"demo_count", ds.demos.size()},
                               {"workspace_seeds", ds.workspace_seeds},
                               {"blocks", nlohmann::json::array()}};
    for (const auto& [name, bytes] : blocks)
    {
        write_file(dir / name, bytes);
        manifest["blocks"].push_back({{"name", name}, {"bytes", bytes.size()}, {"crc32", crc_of(bytes)}});
    }
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

Dataset load_dataset(const std::filesystem::path& dir)
{
    nlohmann::json manifest;
    try
    {
        manifest = nlohmann::json::parse(read_file(dir / "manifest.json"));
    }
    catch (const nlohmann::json::exception& e)
    {
        throw DatasetError(std::string("malformed dataset manifest: ") + e.what());
    }
    if (manifest.value("format", "") != "neuroplan-dataset")
        throw DatasetError("not a neuroplan dataset: " + dir.string());
    if (manifest.value("version", -1) != kDatasetVersion)
        throw DatasetError("unsupported dataset version " + manifest.value("version", nlohmann::json()).dump());

    std::map<std::string, std::string> blocks;
    for (const auto& b : manifest.at("blocks"))
    {
        const std::string name = b.at("name");
        std::string bytes = read_file(dir / name);
        if (bytes.size() != b.at("bytes").get<std::size_t>())
            throw DatasetError("dataset block " + name + " has the wrong size");
        if (crc_of(bytes) != b.at("crc32").get<std::uint32_t>())
            throw DatasetError("checksum mismatch in dataset block " + name);
        blocks[name] = std::move(bytes);
    }
    for (const char* name : {"workspaces.json", "boxes.f64", "clouds.f64", "paths.f64", "demos.u64"})
        if (!blocks.count(name))
            throw DatasetError(std::string("dataset block missing: ") + name);

    Dataset ds;
    try
    {
        ds.env = env_kind_from_string(manifest.at("env"));
        ds.split = split_from_string(manifest.at("split"));
        ds.seed = manifest.at("seed");
        ds.robot = robot_from_json(manifest.at("robot"));
        ds.workspace_seeds = manifest.at("workspace_seeds").get<std::vector<std::uint64_t>>();
    }
    catch (const std::exception& e)
    {
        throw DatasetError(std::string("malformed dataset manifest: ") + e.what());
    }
    const std::size_t m = manifest.at("workspace_dim");
    const std::size_t d = manifest.at("cspace_dim");
    const std::size_t np = manifest.at("cloud_points");
    const std::size_t nw = manifest.at("workspace_count");
    const std::size_t nd = manifest.at("demo_count");
    if (ds.robot.workspace_dim() != m || ds.robot.dof() != d || robot_for(ds.env).kind() != ds.robot.kind())
        throw DatasetError("dataset shape mismatch: robot does not match the declared dimensions");
    if (ds.workspace_seeds.size() != nw)
        throw DatasetError("dataset shape mismatch: workspace seed count");

    for (const auto& w : nlohmann::json::parse(blocks["workspaces.json"]))
    {
        Workspace ws = workspace_from_json(w);
        if (ws.dim() != m)
            throw DatasetError("dataset shape mismatch: workspace of dimension " + std::to_string(ws.dim()) +
                               " in a " + std::to_string(m) + "-D dataset");
        ds.workspaces.push_back(std::move(ws));
    }
    if (ds.workspaces.size() != nw)
        throw DatasetError("dataset shape mismatch: workspace count");
    // The JSON copy is for inspection; exact corner coordinates come from the raw block.
    const auto boxes = unpack<double>(blocks["boxes.f64"], "boxes.f64");
    std::size_t at = 0;
    auto take_box = [&](Box b) {
        if (at + 2 * m > boxes.size())
            throw DatasetError("dataset shape mismatch: box block too short");
        for (std::size_t a = 0; a < m; ++a)
        {
            b.lo[a] = boxes[at + a];
            b.hi[a] = boxes[at + m + a];
        }
        at += 2 * m;
        return b;
    };
    for (auto& w : ds.workspaces)
    {
        const Box bounds = take_box(w.bounds());
        std::vector<Box> obs;
        for (const auto& o : w.obstacles())
            obs.push_back(take_box(o));
        w = Workspace(bounds, std::move(obs));
    }
    if (at != boxes.size())
        throw DatasetError("dataset shape mismatch: trailing box data");

    const auto clouds = unpack<double>(blocks["clouds.f64"], "clouds.f64");
    if (clouds.size() != nw * np * m)
        throw DatasetError("dataset shape mismatch: point cloud block size");
    for (std::size_t i = 0; i < nw; ++i)
    {
        PointCloud pc;
        pc.dim = m;
        const auto first = clouds.begin() + static_cast<std::ptrdiff_t>(i * np * m);
        pc.coords.assign(first, first + static_cast<std::ptrdiff_t>(np * m));
        ds.clouds.push_back(std::move(pc));
    }

    const auto index = unpack<std::uint64_t>(blocks["demos.u64"], "demos.u64");
    const auto paths = unpack<double>(blocks["paths.f64"], "paths.f64");
    if (index.size() != 2 * nd)
        throw DatasetError("dataset shape mismatch: demo index size");
    std::size_t offset = 0;
    const std::uint32_t mask = ds.robot.wrap_mask();
    for (std::size_t k = 0; k < nd; ++k)
    {
        Demo demo;
        demo.workspace = index[2 * k];
        const std::size_t len = index[2 * k + 1];
        if (demo.workspace >= nw || len < 1 || offset + len * d > paths.size())
            throw DatasetError("dataset shape mismatch: demo " + std::to_string(k));
        for (std::size_t s = 0; s < len; ++s, offset += d)
            demo.path.states.emplace_back(std::span(paths.data() + offset, d), mask);
        ds.demos.push_back(std::move(demo));
    }
    if (offset != paths.size())
        throw DatasetError("dataset shape mismatch: trailing path data");
    return ds;
}

} // namespace neuroplan
