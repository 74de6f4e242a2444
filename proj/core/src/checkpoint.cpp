#include "scoremerge/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "scoremerge/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian; this build target is not");

namespace scoremerge {

namespace {

constexpr char kMagic[8] = {'S', 'M', 'R', 'G', 'C', 'K', 'P', 'T'};

struct Writer {
    std::ofstream out;
    explicit Writer(const std::string& path) : out(path, std::ios::binary | std::ios::trunc) {
        if (!out) throw IoError("cannot open checkpoint for writing: " + path);
    }
    void bytes(const void* p, std::size_t n) {
        out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
        if (!out.good()) throw IoError("checkpoint write failed");
    }
    void u32(std::uint32_t v) { bytes(&v, sizeof v); }
    void u64(std::uint64_t v) { bytes(&v, sizeof v); }
    void f64(double v) { bytes(&v, sizeof v); }
    void f64s(std::span<const double> v) { bytes(v.data(), v.size() * sizeof(double)); }
};

struct Reader {
    std::ifstream in;
    explicit Reader(const std::string& path) : in(path, std::ios::binary) {
        if (!in) throw IoError("cannot open checkpoint for reading: " + path);
    }
    void bytes(void* p, std::size_t n) {
        in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (in.gcount() != static_cast<std::streamsize>(n))
            throw IoError("checkpoint truncated");
    }
    std::uint32_t u32() {
        std::uint32_t v;
        bytes(&v, sizeof v);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        bytes(&v, sizeof v);
        return v;
    }
    double f64() {
        double v;
        bytes(&v, sizeof v);
        return v;
    }
    std::vector<double> f64s(std::size_t n) {
        std::vector<double> v(n);
        bytes(v.data(), n * sizeof(double));
        return v;
    }
};

}  // namespace

void save_checkpoint(const std::string& path, const Expert& expert) {
    Writer w(path);
    w.bytes(kMagic, sizeof kMagic);
    w.u32(kCheckpointVersion);
    w.u32(static_cast<std::uint32_t>(expert.model()));
    w.u32(static_cast<std::uint32_t>(expert.param_kind()));
    w.u32(static_cast<std::uint32_t>(expert.native_schedule().form()));
    w.f64(expert.native_schedule().gamma_min());
    w.f64(expert.native_schedule().gamma_max());
    w.u64(expert.dim());
    if (expert.is_analytic()) {
        const GaussianMixtureSpec& g = expert.gmm();
        w.u64(g.components());
        w.f64s(g.weights);
        w.f64s(g.means);
        w.f64s(g.variances);
        return;
    }
    const ScoreNet& net = expert.net();
    const MlpConfig& mlp = net.config();
    w.u64(mlp.hidden.size());
    for (std::size_t h : mlp.hidden) w.u64(h);
    w.u64(mlp.fourier_bands);
    w.u64(net.param_count());
    // Raw first, then the active (EMA) buffer; raw falls back to active
    // when training did not keep a separate copy.
    if (expert.raw_params().empty())
        w.f64s(net.params());
    else
        w.f64s(expert.raw_params());
    w.f64s(net.params());
}

Expert load_checkpoint(const std::string& path) {
    Reader r(path);
    char magic[8];
    r.bytes(magic, sizeof magic);
    if (std::memcmp(magic, kMagic, sizeof magic) != 0)
        throw IoError("not a checkpoint file: " + path);
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw IoError("unsupported checkpoint version " + std::to_string(version));
    const auto model = static_cast<ModelKind>(r.u32());
    const auto param = static_cast<ParamKind>(r.u32());
    const auto form = static_cast<ScheduleForm>(r.u32());
    const double gmin = r.f64();
    const double gmax = r.f64();
    const std::uint64_t dim = r.u64();
    const NoiseSchedule sched(gmin, gmax, form);

    if (model != ModelKind::neural_net) {
        GaussianMixtureSpec g;
        g.dim = dim;
        const std::uint64_t k = r.u64();
        g.weights = r.f64s(k);
        g.means = r.f64s(k * dim);
        g.variances = r.f64s(k);
        if (param != ParamKind::score)
            throw IoError("analytic checkpoint must use score parameterization");
        return Expert::analytic(std::move(g), sched);
    }

    MlpConfig mlp;
    mlp.dim = dim;
    const std::uint64_t layers = r.u64();
    mlp.hidden.resize(layers);
    for (auto& h : mlp.hidden) h = r.u64();
    mlp.fourier_bands = r.u64();
    ScoreNet net(mlp);
    const std::uint64_t count = r.u64();
    if (count != net.param_count()) throw IoError("checkpoint parameter count mismatch");
    std::vector<double> raw = r.f64s(count);
    std::vector<double> ema = r.f64s(count);
    std::copy(ema.begin(), ema.end(), net.params().begin());
    Expert e = Expert::neural(std::move(net), sched, param);
    e.set_raw_params(std::move(raw));
    return e;
}

}  // namespace scoremerge
