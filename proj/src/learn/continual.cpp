#include "neuroplan/learn/continual.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace neuroplan {

const char* to_string(MemoryPolicy p) noexcept
{
    switch (p)
    {
    case MemoryPolicy::Reservoir:
        return "reservoir";
    case MemoryPolicy::Surprise:
        return "surprise";
    case MemoryPolicy::Reward:
        return "reward";
    case MemoryPolicy::CoverageKnn:
        return "coverage_knn";
    }
    return "?";
}

MemoryPolicy memory_policy_from_string(const std::string& s)
{
    for (auto p : {MemoryPolicy::Reservoir, MemoryPolicy::Surprise, MemoryPolicy::Reward, MemoryPolicy::CoverageKnn})
        if (s == to_string(p))
            return p;
    throw std::invalid_argument("unknown memory policy: " + s);
}

void ReplayBuffer::validate() const
{
    if (period < 1 || batch_size < 1)
        throw std::invalid_argument("ReplayBuffer: period and batch size must be >= 1");
}

namespace {

void put(EpisodicMemory& mem, std::size_t slot, const TrainingSample& s, double loss, const nn::Vector& f)
{
    if (slot == mem.items.size())
    {
        mem.items.push_back(s);
        mem.scores.push_back(loss);
        mem.features.push_back(f);
    }
    else
    {
        mem.items[slot] = s;
        mem.scores[slot] = loss;
        mem.features[slot] = f;
    }
}

double sq_dist(const nn::Vector& a, const nn::Vector& b)
{
    if (a.size() != b.size())
        throw std::invalid_argument("coverage_knn: feature size mismatch");
    return (a - b).squaredNorm();
}

void coverage_update(EpisodicMemory& mem, const TrainingSample& s, double loss, const nn::Vector& f)
{
    const std::size_t n = mem.size();
    if (n < 2)
    {
        put(mem, n, s, loss, f);
        return;
    }
    double d_new = std::numeric_limits<double>::infinity();
    for (const auto& g : mem.features)
        d_new = std::min(d_new, sq_dist(f, g));
    std::vector<double> nn_d(n, std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
        {
            const double d = sq_dist(mem.features[i], mem.features[j]);
            nn_d[i] = std::min(nn_d[i], d);
            nn_d[j] = std::min(nn_d[j], d);
        }
    std::vector<double> sorted = nn_d;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n / 2), sorted.end());
    if (d_new < sorted[n / 2])
        return;
    const auto victim = static_cast<std::size_t>(std::min_element(nn_d.begin(), nn_d.end()) - nn_d.begin());
    put(mem, victim, s, loss, f);
}

} // namespace

void reservoir_update(EpisodicMemory& mem, const TrainingSample& sample, Rng& rng)
{
    ++mem.seen_count;
    if (mem.capacity == 0)
        return;
    if (mem.size() < mem.capacity)
    {
        put(mem, mem.size(), sample, 0.0, {});
        return;
    }
    const auto j = std::uniform_int_distribution<std::uint64_t>(0, mem.seen_count - 1)(rng);
    if (j < mem.capacity)
        put(mem, static_cast<std::size_t>(j), sample, 0.0, {});
}

void select_update(EpisodicMemory& mem, const TrainingSample& sample, double loss, MemoryPolicy policy, Rng& rng,
                   const nn::Vector& features)
{
    if (policy == MemoryPolicy::Reservoir)
    {
        reservoir_update(mem, sample, rng);
        return;
    }
    ++mem.seen_count;
    if (mem.capacity == 0)
        return;
    if (policy == MemoryPolicy::CoverageKnn)
    {
        if (mem.full())
            coverage_update(mem, sample, loss, features);
        else
            put(mem, mem.size(), sample, loss, features);
        return;
    }
    if (!mem.full())
    {
        put(mem, mem.size(), sample, loss, features);
        return;
    }
    if (policy == MemoryPolicy::Surprise)
    {
        const auto it = std::min_element(mem.scores.begin(), mem.scores.end());
        if (loss > *it)
            put(mem, static_cast<std::size_t>(it - mem.scores.begin()), sample, loss, features);
    }
    else
    {
        const auto it = std::max_element(mem.scores.begin(), mem.scores.end());
        if (loss < *it)
            put(mem, static_cast<std::size_t>(it - mem.scores.begin()), sample, loss, features);
    }
}

nn::Vector sample_features(const Normalizer& norm, const TrainingSample& s)
{
    const std::size_t d = norm.dim();
    nn::Vector f(static_cast<Eigen::Index>(3 * d));
    norm.normalize(s.c_t, std::span<double>(f.data(), d));
    norm.normalize(s.c_goal, std::span<double>(f.data() + d, d));
    norm.normalize(s.y, std::span<double>(f.data() + 2 * d, d));
    return f;
}

nn::Vector memory_gradient(const MPNetModel& model, const EpisodicMemory& mem, std::span<const PointCloud> clouds,
                           bool with_enet, double beta)
{
    if (mem.empty())
        throw std::invalid_argument("memory_gradient: empty memory");
    return batch_gradient(model, mem.items, clouds, with_enet, nn::DropoutMode::off(), beta).flat;
}

nn::Vector gem_project(const nn::Vector& g, const nn::Vector& g_m)
{
    if (g.size() != g_m.size())
        throw std::invalid_argument("gem_project: length mismatch");
    // Rounding slack so that a projected gradient projects onto itself.
    auto holds = [&](const nn::Vector& v, double dot) { return dot >= -1e-12 * v.norm() * g_m.norm(); };
    const double dot = g.dot(g_m);
    if (holds(g, dot))
        return g;
    const double m2 = g_m.squaredNorm();
    nn::Vector out = g - (dot / m2) * g_m;
    // Refine when cancellation leaves the residual outside the slack.
    for (int k = 0; k < 4; ++k)
    {
        const double r = out.dot(g_m);
        if (holds(out, r))
            break;
        out -= (r / m2) * g_m;
    }
    // g anti-parallel to g_M: what is left is rounding noise around zero.
    if (!holds(out, out.dot(g_m)) && out.norm() <= 1e-9 * g.norm())
        out.setZero();
    return out;
}

Learner::Learner(MPNetModel& m, const ContinualOptions& o)
    : model(&m), opts(o), adam(nn::AdamState::for_params(trainable_size(m, o.with_enet), o.lr))
{
}

void Learner::step(const nn::Vector& grad)
{
    if (opts.optimizer == Optimizer::Adam)
    {
        apply_gradient(*model, grad, adam, opts.with_enet);
        return;
    }
    const auto np = static_cast<Eigen::Index>(model->pnet.size());
    if (grad.size() != static_cast<Eigen::Index>(trainable_size(*model, opts.with_enet)))
        throw std::invalid_argument("Learner::step: gradient length mismatch");
    model->pnet.mutable_flat() -= opts.lr * grad.head(np);
    if (opts.with_enet)
        model->enet.mutable_flat() -= opts.lr * grad.tail(grad.size() - np);
}

namespace {

nn::Vector projected(Learner& l, const nn::Vector& g, const EpisodicMemory& mem, std::span<const PointCloud> clouds,
                     StepInfo* info)
{
    if (mem.empty())
        return g;
    nn::Vector g_m = memory_gradient(*l.model, mem, clouds, l.opts.with_enet, l.opts.beta);
    nn::Vector out = gem_project(g, g_m);
    if (info)
    {
        info->projected = g.dot(g_m) < 0.0;
        info->g_m = std::move(g_m);
    }
    return out;
}

} // namespace

StepInfo continual_step(Learner& learner, std::span<const TrainingSample> demo_samples, EpisodicMemory& mem,
                        ReplayBuffer& buf, std::span<const PointCloud> clouds, Rng& rng)
{
    StepInfo info;
    if (demo_samples.empty())
        return info;
    const ContinualOptions& o = learner.opts;
    for (int k = 0; k < o.steps_per_demo; ++k)
    {
        BatchGradient bg = batch_gradient(*learner.model, demo_samples, clouds, o.with_enet,
                                          nn::DropoutMode::sampled(rng), o.beta);
        nn::Vector gp = projected(learner, bg.flat, mem, clouds, k == 0 ? &info : nullptr);
        if (k == 0)
        {
            info.loss = bg.loss;
            info.g = std::move(bg.flat);
            info.g_proj = gp;
        }
        learner.step(gp);
    }

    const bool needs_loss = o.policy == MemoryPolicy::Surprise || o.policy == MemoryPolicy::Reward;
    for (const auto& s : demo_samples)
    {
        buf.items.push_back(s);
        const double loss = needs_loss ? batch_loss(*learner.model, std::span(&s, 1), clouds, o.beta) : 0.0;
        const nn::Vector f = o.policy == MemoryPolicy::CoverageKnn
                                 ? sample_features(learner.model->normalizer, s)
                                 : nn::Vector{};
        select_update(mem, s, loss, o.policy, rng, f);
    }
    return info;
}

bool rehearse(Learner& learner, int t, const ReplayBuffer& buf, const EpisodicMemory& mem,
              std::span<const PointCloud> clouds, Rng& rng)
{
    buf.validate();
    if (t % buf.period != 0 || buf.items.size() <= buf.batch_size)
        return false;
    std::vector<TrainingSample> batch;
    batch.reserve(buf.batch_size);
    std::sample(buf.items.begin(), buf.items.end(), std::back_inserter(batch), buf.batch_size, rng);
    const ContinualOptions& o = learner.opts;
    const BatchGradient bg =
        batch_gradient(*learner.model, batch, clouds, o.with_enet, nn::DropoutMode::sampled(rng), o.beta);
    learner.step(projected(learner, bg.flat, mem, clouds, nullptr));
    return true;
}

nlohmann::json to_json(const LogRecord& r)
{
    return {{"t", r.t},
            {"expert_called", r.expert_called},
            {"demo_len", r.demo_len},
            {"loss", r.loss ? nlohmann::json(*r.loss) : nlohmann::json(nullptr)},
            {"mem_size", r.mem_size},
            {"buf_size", r.buf_size}};
}

void write_log(std::ostream& os, std::span<const LogRecord> log)
{
    for (const auto& r : log)
        os << to_json(r).dump() << '\n';
}

namespace {

// Shared stream driver. With a plan config the model gets the first attempt once t > N_c.
LoopResult run_stream(Learner& learner, std::span<const StreamItem> stream, std::span<const PointCloud> clouds,
                      const Expert& expert, EpisodicMemory& mem, ReplayBuffer& buf, Rng& rng,
                      const PlanConfig* plan_cfg)
{
    buf.validate();
    LoopResult res;
    for (std::size_t k = 0; k < stream.size(); ++k)
    {
        const int t = static_cast<int>(k) + 1;
        const StreamItem& item = stream[k];
        LogRecord rec;
        rec.t = t;
        bool solved = false;
        if (plan_cfg && t > learner.opts.n_c)
        {
            solved = mpnet_path(*learner.model, item.problem, *plan_cfg, rng).path.has_value();
            if (solved)
                ++res.model_solved;
        }
        if (!solved)
        {
            rec.expert_called = true;
            ++res.demo_count;
            const auto demo = expert(item.problem, rng);
            if (!demo)
            {
                ++res.expert_failures;
            }
            else
            {
                rec.demo_len = demo->size();
                const auto samples = one_step_pairs(*demo, item.cloud);
                rec.loss = continual_step(learner, samples, mem, buf, clouds, rng).loss;
            }
        }
        rehearse(learner, t, buf, mem, clouds, rng);
        rec.mem_size = mem.size();
        rec.buf_size = buf.items.size();
        res.log.push_back(rec);
    }
    return res;
}

} // namespace

LoopResult continual_loop(Learner& learner, std::span<const StreamItem> stream, std::span<const PointCloud> clouds,
                          const Expert& expert, EpisodicMemory& mem, ReplayBuffer& buf, Rng& rng)
{
    return run_stream(learner, stream, clouds, expert, mem, buf, rng, nullptr);
}

LoopResult active_continual_loop(Learner& learner, std::span<const StreamItem> stream,
                                 std::span<const PointCloud> clouds, const Expert& expert, const PlanConfig& plan_cfg,
                                 EpisodicMemory& mem, ReplayBuffer& buf, Rng& rng)
{
    PlanConfig np = plan_cfg;
    np.plan_oracle = false;
    return run_stream(learner, stream, clouds, expert, mem, buf, rng, &np);
}

double backward_transfer(double success_before, double success_after)
{
    if (success_before < 0.0 || success_before > 1.0 || success_after < 0.0 || success_after > 1.0)
        throw std::invalid_argument("backward_transfer: rates must lie in [0, 1]");
    return success_after - success_before;
}

} // namespace neuroplan
