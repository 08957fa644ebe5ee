#include "tabgen/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace tabgen {
namespace stats {
namespace {

// Regularized lower incomplete gamma P(a,x) by series expansion (x < a+1).
double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int i = 0; i < 1000; ++i) {
        ap += 1;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a,x) by Lentz continued fraction
// (x >= a+1).
double gamma_q_continued_fraction(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1 - a;
    double c = 1 / tiny;
    double d = 1 / b;
    double h = d;
    for (int i = 1; i <= 1000; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double normal_two_sided_p(double z) {
    return std::erfc(std::abs(z) / std::sqrt(2.0));
}

struct RankedSamples {
    std::vector<double> ranks_a;
    std::vector<double> ranks_b;
    double tie_term = 0;  // sum over tie groups of t^3 - t
    bool has_ties = false;
};

RankedSamples rank_two_samples(std::span<const double> a, std::span<const double> b) {
    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const std::vector<double> ranks = midranks(pooled);

    RankedSamples out;
    out.ranks_a.assign(ranks.begin(), ranks.begin() + static_cast<long>(a.size()));
    out.ranks_b.assign(ranks.begin() + static_cast<long>(a.size()), ranks.end());

    std::sort(pooled.begin(), pooled.end());
    size_t i = 0;
    while (i < pooled.size()) {
        size_t j = i;
        while (j < pooled.size() && pooled[j] == pooled[i]) ++j;
        const double t = static_cast<double>(j - i);
        if (t > 1) {
            out.has_ties = true;
            out.tie_term += t * t * t - t;
        }
        i = j;
    }
    return out;
}

// Null distribution of the rank sum of the first sample, over all
// C(n, n_a) label assignments of the pooled midranks. Works on doubled
// ranks so everything is integral. Returns probabilities indexed by
// doubled-rank-sum.
std::vector<double> exact_rank_sum_distribution(std::span<const double> pooled_ranks,
                                                size_t n_a) {
    std::vector<long> doubled;
    doubled.reserve(pooled_ranks.size());
    long total = 0;
    for (double r : pooled_ranks) {
        const long d = std::lround(2 * r);
        doubled.push_back(d);
        total += d;
    }

    // ways[k][s] = number of k-subsets with doubled rank sum s
    std::vector<std::vector<double>> ways(n_a + 1,
                                          std::vector<double>(static_cast<size_t>(total) + 1, 0));
    ways[0][0] = 1;
    for (long value : doubled) {
        for (size_t k = std::min(n_a, ways.size() - 1); k >= 1; --k) {
            auto& row = ways[k];
            const auto& prev = ways[k - 1];
            for (long s = total; s >= value; --s) {
                if (prev[static_cast<size_t>(s - value)] != 0) {
                    row[static_cast<size_t>(s)] += prev[static_cast<size_t>(s - value)];
                }
            }
        }
    }

    double count_total = 0;
    for (double w : ways[n_a]) count_total += w;
    std::vector<double> probabilities(ways[n_a].size());
    for (size_t s = 0; s < probabilities.size(); ++s) {
        probabilities[s] = ways[n_a][s] / count_total;
    }
    return probabilities;
}

}  // namespace

double chi_squared_upper_tail(double x, double df) {
    if (df <= 0) throw Error("degrees of freedom must be > 0");
    if (x <= 0) return 1.0;
    const double a = df / 2;
    const double half_x = x / 2;
    if (half_x < a + 1) return 1.0 - gamma_p_series(a, half_x);
    return gamma_q_continued_fraction(a, half_x);
}

std::vector<double> midranks(std::span<const double> values) {
    const size_t n = values.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t i, size_t j) { return values[i] < values[j]; });

    std::vector<double> ranks(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j < n && values[order[j]] == values[order[i]]) ++j;
        const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2;
        for (size_t k = i; k < j; ++k) ranks[order[k]] = rank;
        i = j;
    }
    return ranks;
}

KruskalWallisResult kruskal_wallis(const MetricGroups& groups) {
    const size_t k = groups.groups.size();
    if (k < 2) throw Error("kruskal_wallis needs >= 2 groups");
    std::vector<double> pooled;
    std::vector<size_t> sizes;
    for (const auto& [label, values] : groups.groups) {
        if (values.empty()) throw Error("group " + label + " is empty");
        pooled.insert(pooled.end(), values.begin(), values.end());
        sizes.push_back(values.size());
    }
    const double n = static_cast<double>(pooled.size());
    if (pooled.size() < 3) throw Error("kruskal_wallis needs total N >= 3");

    const std::vector<double> ranks = midranks(pooled);

    KruskalWallisResult result;
    result.df = static_cast<int>(k) - 1;

    double tie_term = 0;
    {
        std::vector<double> sorted(pooled);
        std::sort(sorted.begin(), sorted.end());
        size_t i = 0;
        while (i < sorted.size()) {
            size_t j = i;
            while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
            const double t = static_cast<double>(j - i);
            tie_term += t * t * t - t;
            i = j;
        }
    }
    const double correction = 1.0 - tie_term / (n * n * n - n);
    if (correction <= 0) {
        // Every value identical: H is undefined, reported as no effect.
        result.degenerate = true;
        result.h = 0;
        result.p = 1;
        return result;
    }

    double h = 0;
    size_t offset = 0;
    for (size_t g = 0; g < k; ++g) {
        double rank_sum = 0;
        for (size_t i = 0; i < sizes[g]; ++i) rank_sum += ranks[offset + i];
        h += rank_sum * rank_sum / static_cast<double>(sizes[g]);
        offset += sizes[g];
    }
    h = 12.0 / (n * (n + 1)) * h - 3.0 * (n + 1);
    h /= correction;

    result.h = h;
    result.p = chi_squared_upper_tail(h, static_cast<double>(result.df));
    return result;
}

WilcoxonResult wilcoxon_rank_sum(std::span<const double> a, std::span<const double> b,
                                 WilcoxonMode mode) {
    if (a.empty() || b.empty()) throw Error("wilcoxon_rank_sum needs non-empty samples");
    const double n_a = static_cast<double>(a.size());
    const double n_b = static_cast<double>(b.size());
    const RankedSamples ranked = rank_two_samples(a, b);

    double rank_sum_a = 0;
    for (double r : ranked.ranks_a) rank_sum_a += r;
    const double u_a = rank_sum_a - n_a * (n_a + 1) / 2;

    WilcoxonResult result;
    result.u = u_a;

    const bool use_exact = mode == WilcoxonMode::exact ||
                           (mode == WilcoxonMode::automatic &&
                            a.size() + b.size() <= 12 && !ranked.has_ties);
    if (use_exact) {
        if (a.size() + b.size() > 100) {
            throw Error("exact Wilcoxon limited to n_a + n_b <= 100");
        }
        std::vector<double> pooled_ranks(ranked.ranks_a);
        pooled_ranks.insert(pooled_ranks.end(), ranked.ranks_b.begin(), ranked.ranks_b.end());
        const auto distribution = exact_rank_sum_distribution(pooled_ranks, a.size());

        const long observed = std::lround(2 * rank_sum_a);
        double p_le = 0, p_ge = 0;
        for (size_t s = 0; s < distribution.size(); ++s) {
            if (static_cast<long>(s) <= observed) p_le += distribution[s];
            if (static_cast<long>(s) >= observed) p_ge += distribution[s];
        }
        result.exact = true;
        result.p_two_sided = std::min(1.0, 2 * std::min(p_le, p_ge));
        return result;
    }

    const double n = n_a + n_b;
    const double mean = n_a * n_b / 2;
    const double variance =
        n_a * n_b / 12.0 * ((n + 1) - ranked.tie_term / (n * (n - 1)));
    if (variance <= 0) {
        result.p_two_sided = 1.0;
        return result;
    }
    // Continuity correction: shrink |U - mean| by 0.5.
    const double shifted = std::max(0.0, std::abs(u_a - mean) - 0.5);
    result.p_two_sided = normal_two_sided_p(shifted / std::sqrt(variance));
    return result;
}

double bonferroni(double alpha, int m) {
    if (m < 1) throw Error("bonferroni needs m >= 1");
    if (alpha <= 0 || alpha >= 1) throw Error("alpha must be in (0, 1)");
    return alpha / static_cast<double>(m);
}

BoxplotSummary boxplot_summary(std::span<const double> values) {
    if (values.empty()) throw Error("boxplot_summary needs n >= 1");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const size_t n = sorted.size();

    auto quantile = [&](double q) {
        const double h = q * static_cast<double>(n - 1);
        const size_t lo = static_cast<size_t>(std::floor(h));
        const size_t hi = std::min(lo + 1, n - 1);
        const double frac = h - std::floor(h);
        return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
    };

    BoxplotSummary box;
    box.q1 = quantile(0.25);
    box.median = quantile(0.5);
    box.q3 = quantile(0.75);
    box.iqr = box.q3 - box.q1;

    const double notch = 1.57 * box.iqr / std::sqrt(static_cast<double>(n));
    box.notch_low = box.median - notch;
    box.notch_high = box.median + notch;

    const double fence_low = box.q1 - 1.5 * box.iqr;
    const double fence_high = box.q3 + 1.5 * box.iqr;
    box.whisker_low = box.q3;
    box.whisker_high = box.q1;
    bool any_inside = false;
    for (double v : sorted) {
        if (v >= fence_low && v <= fence_high) {
            if (!any_inside) {
                box.whisker_low = box.whisker_high = v;
                any_inside = true;
            } else {
                box.whisker_low = std::min(box.whisker_low, v);
                box.whisker_high = std::max(box.whisker_high, v);
            }
        } else {
            box.outliers.push_back(v);
        }
    }
    return box;
}

bool PairwiseReport::significant(const std::string& a, const std::string& b) const {
    for (const auto& comparison : comparisons) {
        if ((comparison.group_a == a && comparison.group_b == b) ||
            (comparison.group_a == b && comparison.group_b == a)) {
            return comparison.significant;
        }
    }
    return false;
}

PairwiseReport pairwise_comparison_report(const MetricGroups& groups, double alpha,
                                          WilcoxonMode mode) {
    const size_t k = groups.groups.size();
    if (k < 2) throw Error("pairwise comparison needs >= 2 groups");
    const int pairs = static_cast<int>(k * (k - 1) / 2);

    PairwiseReport report;
    report.alpha = alpha;
    report.adjusted_alpha = bonferroni(alpha, pairs);
    for (size_t i = 0; i < k; ++i) {
        for (size_t j = i + 1; j < k; ++j) {
            const auto& [label_a, values_a] = groups.groups[i];
            const auto& [label_b, values_b] = groups.groups[j];
            const WilcoxonResult r = wilcoxon_rank_sum(values_a, values_b, mode);
            report.comparisons.push_back(
                {label_a, label_b, r.u, r.p_two_sided, r.p_two_sided < report.adjusted_alpha});
        }
    }
    return report;
}

}  // namespace stats
}  // namespace tabgen
