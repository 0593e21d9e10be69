#include "neuroplan/nn/checkpoint.hpp"

#include <bit>
#include <chrono>
#include <ctime>
#include <fstream>
#include <stdexcept>

namespace neuroplan::nn {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

namespace {

constexpr int kVersion = 1;

std::string utc_now()
{
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace

nlohmann::json spec_to_json(const NetSpec& spec)
{
    return {{"layer_sizes", spec.layer_sizes}, {"activation", to_string(spec.activation)}, {"dropout", spec.dropout}};
}

NetSpec spec_from_json(const nlohmann::json& j)
{
    NetSpec s;
    s.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
    s.activation = activation_from_string(j.at("activation").get<std::string>());
    s.dropout = j.at("dropout").get<std::vector<double>>();
    s.validate();
    return s;
}

void save_checkpoint(const std::filesystem::path& file, const NetSpec& spec, const NetParams& params,
                     std::uint64_t seed, std::string created)
{
    if (params.size() != spec.param_count())
        throw std::invalid_argument("save_checkpoint: parameter count does not match spec");
    nlohmann::json header{{"format", "neuroplan-params"},
                          {"version", kVersion},
                          {"spec", spec_to_json(spec)},
                          {"created", created.empty() ? utc_now() : created},
                          {"seed", seed},
                          {"count", params.size()},
                          {"encoding", "f64le"}};
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("save_checkpoint: cannot open " + file.string());
    out << header.dump() << '\n';
    out.write(reinterpret_cast<const char*>(params.flat().data()),
              static_cast<std::streamsize>(params.size() * sizeof(double)));
    if (!out)
        throw std::runtime_error("save_checkpoint: write failed for " + file.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& file)
{
    std::ifstream in(file, std::ios::binary);
    if (!in)
        throw std::runtime_error("load_checkpoint: cannot open " + file.string());
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("load_checkpoint: missing header");
    nlohmann::json header;
    try
    {
        header = nlohmann::json::parse(line);
    }
    catch (const nlohmann::json::exception& e)
    {
        throw std::runtime_error(std::string("load_checkpoint: bad header: ") + e.what());
    }
    if (header.value("format", "") != "neuroplan-params" || header.value("version", 0) != kVersion)
        throw std::runtime_error("load_checkpoint: unsupported format or version");
    if (header.value("encoding", "") != "f64le")
        throw std::runtime_error("load_checkpoint: unsupported encoding");

    Checkpoint ck;
    ck.spec = spec_from_json(header.at("spec"));
    ck.seed = header.value("seed", std::uint64_t{0});
    ck.created = header.value("created", "");
    const auto count = header.at("count").get<std::size_t>();
    if (count != ck.spec.param_count())
        throw std::runtime_error("load_checkpoint: count does not match spec");
    Vector flat(static_cast<Eigen::Index>(count));
    in.read(reinterpret_cast<char*>(flat.data()), static_cast<std::streamsize>(count * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(count * sizeof(double)))
        throw std::runtime_error("load_checkpoint: truncated parameter block");
    if (in.peek() != std::char_traits<char>::eof())
        throw std::runtime_error("load_checkpoint: trailing bytes after parameter block");
    ck.params = NetParams(std::move(flat));
    return ck;
}

} // namespace neuroplan::nn
