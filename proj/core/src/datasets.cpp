#include "scoremerge/datasets.hpp"

#include <cmath>

#include "scoremerge/errors.hpp"
#include "scoremerge/rng.hpp"
#include "stream_tags.hpp"

namespace scoremerge {

std::string to_string(DatasetKind k) {
    switch (k) {
        case DatasetKind::gmm: return "gmm";
        case DatasetKind::checkerboard: return "checkerboard";
        case DatasetKind::rings: return "rings";
        case DatasetKind::quantized_gmm: return "quantized-gmm";
    }
    throw ConfigError("unknown dataset kind");
}

DatasetKind dataset_kind_from_string(const std::string& s) {
    if (s == "gmm") return DatasetKind::gmm;
    if (s == "checkerboard") return DatasetKind::checkerboard;
    if (s == "rings") return DatasetKind::rings;
    if (s == "quantized-gmm") return DatasetKind::quantized_gmm;
    throw ConfigError("unknown dataset kind: " + s);
}

void DatasetSpec::validate() const {
    if (dim == 0) throw ConfigError("dataset dim must be positive");
    if (n_train == 0 || n_test == 0) throw ConfigError("dataset splits must be nonempty");
    if ((kind == DatasetKind::checkerboard || kind == DatasetKind::rings) && dim != 2)
        throw ConfigError("checkerboard/rings datasets are 2D");
    if (!quantized() && bit_depth != 0)
        throw ConfigError("bit_depth only applies to quantized datasets");
    if (quantized() && bit_depth > 16) throw ConfigError("bit_depth must be at most 16");
}

GaussianMixtureSpec benchmark_gmm() {
    GaussianMixtureSpec spec;
    spec.dim = 2;
    spec.weights = {0.35, 0.30, 0.20, 0.15};
    spec.means = {0.5, 0.5, -0.5, 0.5, -0.5, -0.5, 0.5, -0.5};
    spec.variances = {0.020, 0.010, 0.030, 0.015};
    spec.validate();
    return spec;
}

double dequant_center(std::uint64_t symbol, std::size_t bit_depth) {
    const double levels = std::pow(2.0, static_cast<double>(bit_depth));
    return 2.0 * (static_cast<double>(symbol) + 0.5) / levels - 1.0;
}

std::uint64_t quantize_symbol(double y, std::size_t bit_depth) {
    const double levels = std::pow(2.0, static_cast<double>(bit_depth));
    double s = std::floor((y + 1.0) * 0.5 * levels);
    if (s < 0.0) s = 0.0;
    if (s > levels - 1.0) s = levels - 1.0;
    return static_cast<std::uint64_t>(s);
}

namespace {

void sample_point(DatasetKind kind, const GaussianMixtureSpec& gmm, CounterRng& rng,
                  std::span<double> out) {
    switch (kind) {
        case DatasetKind::gmm:
        case DatasetKind::quantized_gmm: {
            const Vec x = gmm_sample(gmm, rng);
            std::copy(x.begin(), x.end(), out.begin());
            return;
        }
        case DatasetKind::checkerboard: {
            // 4x2 board: column index fixes which vertical half is filled.
            const std::uint64_t col = rng.below(4);
            out[0] = -1.0 + (static_cast<double>(col) + rng.uniform()) * 0.5;
            out[1] = -1.0 + static_cast<double>(col % 2) + rng.uniform();
            return;
        }
        case DatasetKind::rings: {
            const double r = (rng.next_u64() & 1ull) ? 0.85 : 0.4;
            const double theta = rng.uniform() * 6.283185307179586;
            const double rr = r + 0.03 * rng.normal();
            out[0] = rr * std::cos(theta);
            out[1] = rr * std::sin(theta);
            return;
        }
    }
    throw ConfigError("unknown dataset kind");
}

}  // namespace

Dataset make_dataset(const DatasetSpec& spec_in) {
    DatasetSpec spec = spec_in;
    spec.validate();
    if (spec.quantized() && spec.bit_depth == 0) spec.bit_depth = 5;
    const GaussianMixtureSpec gmm =
        spec.dim == 2 ? benchmark_gmm() : GaussianMixtureSpec::single(spec.dim, 0.0, 0.04);

    Dataset ds;
    ds.spec = spec;
    ds.train = Matrix(spec.n_train, spec.dim);
    ds.test = Matrix(spec.n_test, spec.dim);
    if (spec.quantized()) ds.test_symbols = Matrix(spec.n_test, spec.dim);

    Vec point(spec.dim);
    const std::size_t total = spec.n_train + spec.n_test;
    for (std::size_t i = 0; i < total; ++i) {
        CounterRng rng(spec.seed, tags::kDataset, i);
        sample_point(spec.kind, gmm, rng, point);
        const bool is_train = i < spec.n_train;
        double* dst = is_train ? ds.train.row(i) : ds.test.row(i - spec.n_train);
        if (!spec.quantized()) {
            std::copy(point.begin(), point.end(), dst);
            continue;
        }
        // Quantize, keep the symbols for the discrete bound, and store a
        // uniformly dequantized continuous value for training/reference.
        for (std::size_t j = 0; j < spec.dim; ++j) {
            const std::uint64_t sym = quantize_symbol(point[j], spec.bit_depth);
            if (!is_train) ds.test_symbols.row(i - spec.n_train)[j] = static_cast<double>(sym);
            const double levels = std::pow(2.0, static_cast<double>(spec.bit_depth));
            dst[j] = 2.0 * (static_cast<double>(sym) + rng.uniform()) / levels - 1.0;
        }
    }
    return ds;
}

}  // namespace scoremerge
