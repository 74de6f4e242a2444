#include "scoremerge/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "scoremerge/errors.hpp"
#include "scoremerge/rng.hpp"

namespace scoremerge {

double mean(std::span<const double> x) {
    if (x.empty()) throw StatsError("mean of empty sample");
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

double sample_sd(std::span<const double> x) {
    if (x.size() < 2) throw StatsError("sample sd needs at least two points");
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(x.size() - 1));
}

double median(std::vector<double> x) {
    if (x.empty()) throw StatsError("median of empty sample");
    const std::size_t mid = x.size() / 2;
    std::nth_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(mid), x.end());
    double hi = x[mid];
    if (x.size() % 2 == 1) return hi;
    double lo = *std::max_element(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

double normal_inv_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("normal_inv_cdf needs p in (0,1)");
    const double q = p - 0.5;
    double r, num, den;
    if (std::abs(q) <= 0.425) {
        r = 0.180625 - q * q;
        num = (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                    6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                  1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                1.3314166789178437745e2) * r + 3.3871328727963666080e0);
        den = (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                    3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                  5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                4.2313330701600911252e1) * r + 1.0);
        return q * num / den;
    }
    r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    if (r <= 5.0) {
        r -= 1.6;
        num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                    2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                  3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                4.63033784615654529590e0) * r + 1.42343711074968357734e0);
        den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                    1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                  6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                  2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                5.46378491116411436990e0) * r + 6.65790464350110377720e0);
        den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                    1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                  1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                5.99832206555887937690e-1) * r + 1.0);
    }
    const double v = num / den;
    return q < 0.0 ? -v : v;
}

namespace {

double euclid(const double* a, const double* b, std::size_t d) {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double r = a[i] - b[i];
        s += r * r;
    }
    return std::sqrt(s);
}

// Exact V-statistic over full sets, streaming (no pair matrix).
double energy_vstat(const Matrix& a, const Matrix& b) {
    const std::size_t n = a.rows, m = b.rows, d = a.cols;
    double cross = 0.0, wa = 0.0, wb = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) cross += euclid(a.row(i), b.row(j), d);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) wa += euclid(a.row(i), a.row(j), d);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) wb += euclid(b.row(i), b.row(j), d);
    const double nn = static_cast<double>(n), mm = static_cast<double>(m);
    return 2.0 * cross / (nn * mm) - 2.0 * wa / (nn * nn) - 2.0 * wb / (mm * mm);
}

// Evenly thin a set to at most cap rows (deterministic).
Matrix thin(const Matrix& x, std::size_t cap) {
    if (x.rows <= cap) return x;
    Matrix out(cap, x.cols);
    for (std::size_t i = 0; i < cap; ++i) {
        const std::size_t src = (i * x.rows) / cap;
        out.set_row(i, x.row_span(src));
    }
    return out;
}

}  // namespace

EnergyDistanceResult energy_distance(const Matrix& a, const Matrix& b, std::size_t permutations,
                                     std::uint64_t seed, std::size_t max_pooled) {
    if (a.cols != b.cols) throw StatsError("energy_distance: dimension mismatch");
    if (a.rows < 100 || b.rows < 100)
        throw StatsError("energy_distance: need at least 100 points per sample");

    EnergyDistanceResult res;
    res.distance = energy_vstat(a, b);
    res.permutations = permutations;
    if (permutations == 0) {
        res.p_value = std::numeric_limits<double>::quiet_NaN();
        return res;
    }

    // Null distribution on a (possibly thinned) pooled set with a cached
    // float distance matrix. Total pair sum is fixed, so each permutation
    // only needs the two within-group sums.
    const std::size_t cap_each = max_pooled / 2;
    const Matrix ta = thin(a, cap_each), tb = thin(b, cap_each);
    const std::size_t n = ta.rows, m = tb.rows, total = n + m, d = ta.cols;
    std::vector<float> dist(total * total, 0.0f);
    auto pooled_row = [&](std::size_t i) { return i < n ? ta.row(i) : tb.row(i - n); };
    for (std::size_t i = 0; i < total; ++i)
        for (std::size_t j = i + 1; j < total; ++j) {
            const float dij = static_cast<float>(euclid(pooled_row(i), pooled_row(j), d));
            dist[i * total + j] = dij;
            dist[j * total + i] = dij;
        }

    const double nn = static_cast<double>(n), mm = static_cast<double>(m);
    double total_sum = 0.0;
    for (std::size_t i = 0; i < total; ++i)
        for (std::size_t j = i + 1; j < total; ++j) total_sum += dist[i * total + j];

    auto ed_from_sums = [&](double wa, double wb) {
        const double cross = total_sum - wa - wb;
        return 2.0 * cross / (nn * mm) - 2.0 * wa / (nn * nn) - 2.0 * wb / (mm * mm);
    };

    std::vector<std::uint32_t> idx(total);
    std::iota(idx.begin(), idx.end(), 0u);
    auto within_sums = [&](const std::vector<std::uint32_t>& ix) {
        double wa = 0.0, wb = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const float* row = dist.data() + static_cast<std::size_t>(ix[i]) * total;
            for (std::size_t j = i + 1; j < n; ++j) wa += row[ix[j]];
        }
        for (std::size_t i = n; i < total; ++i) {
            const float* row = dist.data() + static_cast<std::size_t>(ix[i]) * total;
            for (std::size_t j = i + 1; j < total; ++j) wb += row[ix[j]];
        }
        return std::pair<double, double>(wa, wb);
    };

    auto [wa0, wb0] = within_sums(idx);
    const double observed = ed_from_sums(wa0, wb0);

    CounterRng rng(seed, 0xEDC0DEull);
    std::size_t exceed = 0;
    for (std::size_t p = 0; p < permutations; ++p) {
        for (std::size_t i = total - 1; i > 0; --i) {
            const std::size_t j = rng.below(i + 1);
            std::swap(idx[i], idx[j]);
        }
        auto [wa, wb] = within_sums(idx);
        if (ed_from_sums(wa, wb) >= observed) ++exceed;
    }
    res.p_value = static_cast<double>(1 + exceed) / static_cast<double>(1 + permutations);
    return res;
}

namespace {

std::vector<double> midranks(std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> rank(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = r;
        i = j + 1;
    }
    return rank;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw StatsError("correlation of a constant sequence");
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace

double spearman_rho(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw StatsError("spearman: length mismatch");
    if (x.size() < 3) throw StatsError("spearman: need at least 3 pairs");
    const auto rx = midranks(x), ry = midranks(y);
    return pearson(rx, ry);
}

double spearman_negative_trend_p(std::span<const double> x, std::span<const double> y,
                                 std::size_t permutations, std::uint64_t seed) {
    const double observed = spearman_rho(x, y);
    const auto rx = midranks(x);
    auto ry = midranks(y);
    CounterRng rng(seed, 0x5EA12ull);
    std::size_t at_most = 0;
    for (std::size_t p = 0; p < permutations; ++p) {
        for (std::size_t i = ry.size() - 1; i > 0; --i) {
            const std::size_t j = rng.below(i + 1);
            std::swap(ry[i], ry[j]);
        }
        if (pearson(rx, ry) <= observed) ++at_most;
    }
    return static_cast<double>(1 + at_most) / static_cast<double>(1 + permutations);
}

double sign_flip_p_value(std::span<const double> diffs) {
    const std::size_t k = diffs.size();
    if (k == 0) throw StatsError("sign-flip test on empty sample");
    if (k > 20) throw StatsError("sign-flip test capped at 20 pairs");
    double observed = 0.0;
    for (double d : diffs) observed += d;
    std::size_t count = 0;
    const std::size_t total = std::size_t{1} << k;
    for (std::size_t mask = 0; mask < total; ++mask) {
        double s = 0.0;
        for (std::size_t i = 0; i < k; ++i)
            s += (mask >> i) & 1u ? -diffs[i] : diffs[i];
        if (s >= observed) ++count;
    }
    return static_cast<double>(count) / static_cast<double>(total);
}

}  // namespace scoremerge
