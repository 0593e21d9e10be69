#include "neuroplan/models/model.hpp"

#include "neuroplan/cspace/json.hpp"
#include "neuroplan/nn/checkpoint.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace neuroplan {

namespace {

constexpr int kModelVersion = 1;

} // namespace

std::size_t default_cloud_size(std::size_t workspace_dim) noexcept
{
    return workspace_dim == 3 ? 500 : 200;
}

PointCloud make_point_cloud(const Workspace& ws, std::size_t n_points, std::uint64_t seed)
{
    const std::size_t m = ws.dim();
    PointCloud pc;
    pc.dim = m;
    pc.coords.reserve(n_points * m);
    const auto& obs = ws.obstacles();
    if (obs.empty())
    {
        for (std::size_t i = 0; i < n_points; ++i)
            for (std::size_t a = 0; a < m; ++a)
                pc.coords.push_back(0.5 * (ws.bounds().lo[a] + ws.bounds().hi[a]));
        return pc;
    }

    Rng rng(seed);
    const std::size_t faces = 2 * m;
    for (std::size_t o = 0; o < obs.size(); ++o)
    {
        const std::size_t n_obs = n_points / obs.size() + (o < n_points % obs.size() ? 1 : 0);
        const Box& b = obs[o];
        for (std::size_t f = 0; f < faces; ++f)
        {
            const std::size_t n_face = n_obs / faces + (f < n_obs % faces ? 1 : 0);
            const std::size_t axis = f / 2;
            const double fixed = (f % 2 == 0) ? b.lo[axis] : b.hi[axis];
            for (std::size_t k = 0; k < n_face; ++k)
                for (std::size_t a = 0; a < m; ++a)
                    pc.coords.push_back(a == axis ? fixed : uniform(rng, b.lo[a], b.hi[a]));
        }
    }
    return pc;
}

Normalizer::Normalizer(const RobotModel& robot, const Box& bounds)
{
    if (bounds.dim != robot.workspace_dim())
        throw std::invalid_argument("Normalizer: bounds dimension does not match robot");
    const std::size_t d = robot.dof();
    const std::uint32_t mask = robot.wrap_mask();
    for (std::size_t i = 0; i < d; ++i)
    {
        if ((mask >> i) & 1U)
        {
            lo_.push_back(-kPi);
            hi_.push_back(kPi);
        }
        else
        {
            lo_.push_back(bounds.lo[i]);
            hi_.push_back(bounds.hi[i]);
        }
    }
}

void Normalizer::normalize(const Config& c, std::span<double> out) const
{
    if (c.dim() != dim() || out.size() < dim())
        throw std::invalid_argument("Normalizer::normalize: dimension mismatch");
    for (std::size_t i = 0; i < dim(); ++i)
        out[i] = 2.0 * (c[i] - lo_[i]) / (hi_[i] - lo_[i]) - 1.0;
}

Config Normalizer::denormalize(std::span<const double> x, std::uint32_t wrap_mask) const
{
    if (x.size() != dim())
        throw std::invalid_argument("Normalizer::denormalize: dimension mismatch");
    std::array<double, kMaxDim> v{};
    for (std::size_t i = 0; i < dim(); ++i)
        v[i] = lo_[i] + (x[i] + 1.0) * 0.5 * (hi_[i] - lo_[i]);
    return Config(std::span<const double>(v.data(), dim()), wrap_mask);
}

nn::Vector Normalizer::normalize_cloud(const PointCloud& pc) const
{
    nn::Vector out(static_cast<Eigen::Index>(pc.coords.size()));
    const std::size_t m = pc.dim;
    if (m == 0 || m > dim())
        throw std::invalid_argument("Normalizer::normalize_cloud: bad cloud dimension");
    for (std::size_t i = 0; i < pc.coords.size(); ++i)
    {
        const std::size_t a = i % m;
        out[static_cast<Eigen::Index>(i)] = 2.0 * (pc.coords[i] - lo_[a]) / (hi_[a] - lo_[a]) - 1.0;
    }
    return out;
}

std::size_t pnet_output_size(const RobotModel& robot) noexcept
{
    return robot.kind() == RobotKind::RigidSE2 ? 4 : robot.dof();
}

MPNetModel make_model(const RobotModel& robot, const Box& bounds, const ModelOptions& opts, Rng& rng)
{
    MPNetModel model;
    model.robot = robot;
    model.normalizer = Normalizer(robot, bounds);
    const std::size_t m = robot.workspace_dim();
    const std::size_t n_pc = opts.cloud_points ? opts.cloud_points : default_cloud_size(m);

    std::vector<std::size_t> enet_sizes{n_pc * m};
    enet_sizes.insert(enet_sizes.end(), opts.enet_hidden.begin(), opts.enet_hidden.end());
    enet_sizes.push_back(opts.latent_dim);
    model.enet_spec = nn::NetSpec::make(enet_sizes, opts.activation, 0.0);

    std::vector<std::size_t> pnet_sizes{opts.latent_dim + 2 * robot.dof()};
    pnet_sizes.insert(pnet_sizes.end(), opts.pnet_hidden.begin(), opts.pnet_hidden.end());
    pnet_sizes.push_back(pnet_output_size(robot));
    model.pnet_spec = nn::NetSpec::make(pnet_sizes, opts.activation, opts.pnet_dropout);

    model.enet_spec.validate();
    model.pnet_spec.validate();
    model.enet = nn::init_params(model.enet_spec, rng);
    model.pnet = nn::init_params(model.pnet_spec, rng);
    return model;
}

LatentCode encode(const MPNetModel& model, const PointCloud& pc)
{
    if (pc.coords.size() != model.enet_spec.input_size())
        throw std::invalid_argument("encode: point cloud size does not match the encoder input");
    return nn::forward(model.enet_spec, model.enet, model.normalizer.normalize_cloud(pc), nn::DropoutMode::off());
}

void pnet_input(const MPNetModel& model, const LatentCode& z, const Config& c_t, const Config& c_goal,
                std::span<double> out)
{
    const auto l = static_cast<std::size_t>(z.size());
    const std::size_t d = model.robot.dof();
    if (l != model.latent_dim() || out.size() != l + 2 * d)
        throw std::invalid_argument("pnet_input: shape mismatch");
    for (std::size_t i = 0; i < l; ++i)
        out[i] = z[static_cast<Eigen::Index>(i)];
    model.normalizer.normalize(c_t, out.subspan(l, d));
    model.normalizer.normalize(c_goal, out.subspan(l + d, d));
}

void pnet_target(const MPNetModel& model, const Config& c_next, std::span<double> out)
{
    const std::size_t d = model.robot.dof();
    if (out.size() != pnet_output_size(model.robot) || c_next.dim() != d)
        throw std::invalid_argument("pnet_target: shape mismatch");
    if (model.robot.kind() == RobotKind::RigidSE2)
    {
        double xy[3];
        model.normalizer.normalize(c_next, xy);
        out[0] = xy[0];
        out[1] = xy[1];
        out[2] = std::cos(c_next[2]);
        out[3] = std::sin(c_next[2]);
        return;
    }
    model.normalizer.normalize(c_next, out);
}

Config decode_output(const MPNetModel& model, std::span<const double> out)
{
    if (out.size() != pnet_output_size(model.robot))
        throw std::invalid_argument("decode_output: shape mismatch");
    if (model.robot.kind() == RobotKind::RigidSE2)
    {
        const double n = std::hypot(out[2], out[3]);
        const double theta = n > 0.0 ? std::atan2(out[3] / n, out[2] / n) : 0.0;
        const double x[3] = {out[0], out[1], theta / kPi};
        return model.normalizer.denormalize(x, model.robot.wrap_mask());
    }
    return model.normalizer.denormalize(out, model.robot.wrap_mask());
}

Config predict_next(const MPNetModel& model, const LatentCode& z, const Config& c_t, const Config& c_goal, Rng& rng)
{
    nn::Vector in(static_cast<Eigen::Index>(model.pnet_spec.input_size()));
    pnet_input(model, z, c_t, c_goal, std::span<double>(in.data(), static_cast<std::size_t>(in.size())));
    const nn::Vector out = nn::forward(model.pnet_spec, model.pnet, in, nn::DropoutMode::sampled(rng));
    return decode_output(model, std::span<const double>(out.data(), static_cast<std::size_t>(out.size())));
}

void save_model(const std::filesystem::path& dir, const MPNetModel& model, std::uint64_t seed)
{
    std::filesystem::create_directories(dir);
    nn::save_checkpoint(dir / "enet.ckpt", model.enet_spec, model.enet, seed);
    nn::save_checkpoint(dir / "pnet.ckpt", model.pnet_spec, model.pnet, seed);
    const nlohmann::json meta{{"format", "neuroplan-model"},
                              {"version", kModelVersion},
                              {"robot", robot_to_json(model.robot)},
                              {"normalizer",
                               {{"lo", std::vector<double>(model.normalizer.lo().begin(), model.normalizer.lo().end())},
                                {"hi", std::vector<double>(model.normalizer.hi().begin(), model.normalizer.hi().end())}}}};
    std::ofstream out(dir / "model.json", std::ios::trunc);
    if (!out)
        throw std::runtime_error("save_model: cannot write " + (dir / "model.json").string());
    out << meta.dump(2) << '\n';
}

MPNetModel load_model(const std::filesystem::path& dir)
{
    std::ifstream in(dir / "model.json");
    if (!in)
        throw std::runtime_error("load_model: cannot open " + (dir / "model.json").string());
    nlohmann::json meta;
    try
    {
        meta = nlohmann::json::parse(in);
    }
    catch (const nlohmann::json::exception& e)
    {
        throw std::runtime_error(std::string("load_model: bad model.json: ") + e.what());
    }
    if (meta.value("format", "") != "neuroplan-model" || meta.value("version", 0) != kModelVersion)
        throw std::runtime_error("load_model: unsupported format or version");

    MPNetModel model;
    model.robot = robot_from_json(meta.at("robot"));
    const auto lo = meta.at("normalizer").at("lo").get<std::vector<double>>();
    const auto hi = meta.at("normalizer").at("hi").get<std::vector<double>>();
    if (lo.size() != model.robot.dof() || hi.size() != lo.size())
        throw std::runtime_error("load_model: normalizer does not match robot");
    Box bounds;
    bounds.dim = model.robot.workspace_dim();
    for (std::size_t a = 0; a < bounds.dim; ++a)
    {
        bounds.lo[a] = lo[a];
        bounds.hi[a] = hi[a];
    }
    model.normalizer = Normalizer(model.robot, bounds);

    auto enet = nn::load_checkpoint(dir / "enet.ckpt");
    auto pnet = nn::load_checkpoint(dir / "pnet.ckpt");
    model.enet_spec = enet.spec;
    model.enet = std::move(enet.params);
    model.pnet_spec = pnet.spec;
    model.pnet = std::move(pnet.params);
    if (model.pnet_spec.input_size() != model.latent_dim() + 2 * model.robot.dof() ||
        model.pnet_spec.output_size() != pnet_output_size(model.robot) ||
        model.enet_spec.input_size() % model.robot.workspace_dim() != 0)
        throw std::runtime_error("load_model: network shapes do not match the robot");
    return model;
}

} // namespace neuroplan
