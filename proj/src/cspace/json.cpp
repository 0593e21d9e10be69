#include "neuroplan/cspace/json.hpp"

#include <stdexcept>
#include <vector>

namespace neuroplan {

using nlohmann::json;

json workspace_to_json(const Workspace& ws)
{
    json bounds = json::array();
    for (std::size_t i = 0; i < ws.dim(); ++i)
        bounds.push_back({ws.bounds().lo[i], ws.bounds().hi[i]});
    json obstacles = json::array();
    for (const auto& o : ws.obstacles())
    {
        std::vector<double> center(o.dim), half(o.dim);
        for (std::size_t i = 0; i < o.dim; ++i)
        {
            center[i] = 0.5 * (o.lo[i] + o.hi[i]);
            half[i] = 0.5 * (o.hi[i] - o.lo[i]);
        }
        obstacles.push_back({{"center", center}, {"half_extents", half}});
    }
    return {{"bounds", bounds}, {"obstacles", obstacles}};
}

Workspace workspace_from_json(const json& j)
{
    const auto& jb = j.at("bounds");
    if (!jb.is_array() || jb.size() < 2 || jb.size() > 3)
        throw std::invalid_argument("workspace json: bounds must list 2 or 3 [lo, hi] pairs");
    Box bounds;
    bounds.dim = jb.size();
    for (std::size_t i = 0; i < bounds.dim; ++i)
    {
        bounds.lo[i] = jb[i].at(0).get<double>();
        bounds.hi[i] = jb[i].at(1).get<double>();
    }
    std::vector<Box> obstacles;
    for (const auto& jo : j.at("obstacles"))
    {
        const auto center = jo.at("center").get<std::vector<double>>();
        const auto half = jo.at("half_extents").get<std::vector<double>>();
        obstacles.push_back(Box::from_center(center, half));
    }
    return {bounds, std::move(obstacles)};
}

json robot_to_json(const RobotModel& robot)
{
    json j{{"kind", to_string(robot.kind())}, {"goal_radius", robot.goal_radius()}};
    if (robot.kind() == RobotKind::RigidSE2)
    {
        json body = json::array();
        for (const auto& v : robot.body())
            body.push_back({v.x, v.y});
        j["body"] = body;
    }
    return j;
}

RobotModel robot_from_json(const json& j)
{
    const auto kind = robot_kind_from_string(j.at("kind").get<std::string>());
    const double r = j.value("goal_radius", 1.0);
    switch (kind)
    {
    case RobotKind::Point2D: return RobotModel::point2d(r);
    case RobotKind::Point3D: return RobotModel::point3d(r);
    case RobotKind::RigidSE2:
    {
        std::vector<Vec2> body;
        for (const auto& v : j.at("body"))
            body.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
        return RobotModel::rigid_se2(std::move(body), r);
    }
    }
    throw std::invalid_argument("robot json: unsupported kind");
}

json config_to_json(const Config& c)
{
    return std::vector<double>(c.coords().begin(), c.coords().end());
}

Config config_from_json(const RobotModel& robot, const json& j)
{
    return robot.make_config(j.get<std::vector<double>>());
}

json path_to_json(const Path& p)
{
    json out = json::array();
    for (const auto& c : p.states)
        out.push_back(config_to_json(c));
    return out;
}

Path path_from_json(const RobotModel& robot, const json& j)
{
    Path p;
    for (const auto& jc : j)
        p.states.push_back(config_from_json(robot, jc));
    return p;
}

} // namespace neuroplan
