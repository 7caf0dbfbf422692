#include "gqf/counting.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "gqf/kernels.hpp"
#include "gqf/parallel.hpp"

namespace gqf {

namespace {

struct IntPoly {
    int D = 0, nf = 0;
    std::vector<std::vector<long>> diag;   // nf x D
    std::vector<std::vector<long>> cross;  // nf x D*D, upper triangle
    std::vector<long> target;
};

IntPoly int_poly(const GQF& F, const FieldElement& N, long coord_bound) {
    DescendedSystem S = shift_system(descend(F), N);
    IntPoly out;
    out.D = S.dim();
    out.nf = int(S.forms.size());
    out.diag.assign(size_t(out.nf), std::vector<long>(size_t(out.D), 0));
    out.cross.assign(size_t(out.nf), std::vector<long>(size_t(out.D) * size_t(out.D), 0));
    out.target.assign(size_t(out.nf), 0);
    Int maxc = 0;
    for (int f = 0; f < out.nf; f++) {
        const QMat& M = S.forms[size_t(f)];
        for (int i = 0; i < out.D; i++) {
            if (!is_integer(M.at(i, i))) throw error("non-integral descended coefficient");
            out.diag[size_t(f)][size_t(i)] = M.at(i, i).get_num().get_si();
            maxc = std::max(maxc, Int(abs(M.at(i, i).get_num())));
            for (int j = i + 1; j < out.D; j++) {
                Rat c = M.at(i, j) * 2;
                if (!is_integer(c)) throw error("non-integral descended coefficient");
                out.cross[size_t(f)][size_t(i) * size_t(out.D) + size_t(j)] = c.get_num().get_si();
                maxc = std::max(maxc, Int(abs(c.get_num())));
            }
        }
        out.target[size_t(f)] = S.shift[size_t(f)].get_si();
    }
    // int64 safety: D^2 * maxc * bound^2 must stay far from 2^63
    Int worst = Int(out.D) * out.D * maxc * coord_bound * coord_bound;
    if (worst > (Int(1) << 58)) throw budget_exceeded("coordinates too large for exact int64 path");
    return out;
}

std::pair<std::vector<long>, std::vector<long>> region_box(const CountSpec& spec, int D) {
    if (!spec.box_lo.empty()) {
        if (int(spec.box_lo.size()) != D || int(spec.box_hi.size()) != D)
            throw invalid_input("box override has wrong dimension");
        return {spec.box_lo, spec.box_hi};
    }
    std::vector<long> lo(size_t(D), 0), hi(size_t(D), 0);
    for (int j = 0; j < D; j++) {
        double c = spec.xi.empty() ? 0.0 : spec.xi[size_t(j)];
        lo[size_t(j)] = long(std::ceil(spec.P * (c - spec.delta) - 1e-12));
        hi[size_t(j)] = long(std::floor(spec.P * (c + spec.delta) + 1e-12));
    }
    return {lo, hi};
}

double smooth_weight(const CountSpec& spec, const std::vector<long>& u) {
    double r = 0;
    for (size_t j = 0; j < u.size(); j++) {
        double c = spec.xi.empty() ? 0.0 : spec.xi[j];
        r = std::max(r, std::abs(double(u[j]) / spec.P - c) / spec.delta);
    }
    return (r < 1.0) ? std::exp(-1.0 / (1.0 - r * r)) : 0.0;
}

}  // namespace

CountResult count_direct(const CountSpec& spec) {
    if (!spec.F.is_integral() || !spec.N.is_integral())
        throw invalid_input("count_direct: form and target must be integral");
    DescendedSystem S0 = descend(spec.F);
    const int D = S0.dim();
    auto [lo, hi] = region_box(spec, D);

    long bound = 1;
    double volume = 1;
    for (int j = 0; j < D; j++) {
        long w = hi[size_t(j)] - lo[size_t(j)] + 1;
        if (w <= 0) return {Int(0), 0.0, Int(0)};
        volume *= double(w);
        bound = std::max(bound, std::max(std::abs(lo[size_t(j)]), std::abs(hi[size_t(j)])));
    }
    if (volume > double(spec.budget))
        throw budget_exceeded("direct enumeration over budget; try the split counter");

    IntPoly P = int_poly(spec.F, spec.N, bound);
    const int nf = P.nf;

    // shard over the outermost coordinate; inner axis handled by the
    // roots kernel with per-form quadratic coefficients in t = u_0.
    long outer_total = 1;
    for (int j = 1; j < D; j++) outer_total *= hi[size_t(j)] - lo[size_t(j)] + 1;

    struct Acc {
        long count = 0;
        double weighted = 0;
    };
    long axis_lo = lo[0], axis_hi = hi[0];
    Acc total = sharded_reduce<Acc>(
        outer_total, std::min<long>(256, outer_total),
        [&](long, long b, long e, Acc& acc) {
            std::vector<long> u(size_t(D), 0);
            std::vector<int64_t> c2(size_t(nf), 0), c1(size_t(nf), 0), c0(size_t(nf), 0);
            std::vector<int64_t> roots(size_t(axis_hi - axis_lo + 1), 0);
            for (long idx = b; idx < e; idx++) {
                long rem = idx;
                for (int j = 1; j < D; j++) {
                    long w = hi[size_t(j)] - lo[size_t(j)] + 1;
                    u[size_t(j)] = lo[size_t(j)] + rem % w;
                    rem /= w;
                }
                for (int f = 0; f < nf; f++) {
                    c2[size_t(f)] = P.diag[size_t(f)][0];
                    long lin = 0;
                    long val = -P.target[size_t(f)];
                    for (int i = 1; i < D; i++) {
                        if (u[size_t(i)] == 0) continue;
                        lin += P.cross[size_t(f)][size_t(0) * size_t(D) + size_t(i)] * u[size_t(i)];
                        val += P.diag[size_t(f)][size_t(i)] * u[size_t(i)] * u[size_t(i)];
                        for (int j = i + 1; j < D; j++)
                            if (u[size_t(j)] != 0)
                                val += P.cross[size_t(f)][size_t(i) * size_t(D) + size_t(j)] *
                                       u[size_t(i)] * u[size_t(j)];
                    }
                    c1[size_t(f)] = lin;
                    c0[size_t(f)] = val;
                }
                long nr = kernels::roots_along_axis_i64(c2.data(), c1.data(), c0.data(), nf,
                                                        axis_lo, axis_hi + 1, roots.data());
                acc.count += nr;
                if (spec.weight == SlabWeight::smooth) {
                    for (long r = 0; r < nr; r++) {
                        u[0] = long(roots[size_t(r)]);
                        acc.weighted += smooth_weight(spec, u);
                    }
                }
            }
        },
        [](Acc& into, const Acc& from) {
            into.count += from.count;
            into.weighted += from.weighted;
        },
        Acc{});

    CountResult out;
    out.count = Int(total.count);
    out.weighted = (spec.weight == SlabWeight::smooth) ? total.weighted : double(total.count);
    out.enumerated = Int(volume);
    return out;
}

namespace {

struct VecKey {
    std::array<int64_t, 4> v{};
    bool operator==(const VecKey& o) const { return v == o.v; }
};
struct VecKeyHash {
    size_t operator()(const VecKey& k) const {
        uint64_t h = 0x9e3779b97f4a7c15ULL;
        for (int64_t x : k.v) {
            h ^= uint64_t(x) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        }
        return size_t(h);
    }
};

}  // namespace

Int count_split_diagonal(const CountSpec& spec) {
    auto diag = as_diagonal(spec.F);
    if (!diag) throw invalid_input("count_split_diagonal: form is not a diagonal special shape");
    if (spec.weight != SlabWeight::indicator)
        throw invalid_input("count_split_diagonal: indicator weight only");
    const FieldPtr& K = spec.F.field();
    const int d = K->degree(), n = spec.F.vars();
    if (d > 4) throw budget_exceeded("split counter supports degree up to 4");
    DescendedSystem S0 = descend(spec.F);
    auto [lo, hi] = region_box(spec, S0.dim());

    // per-variable sub-box volumes (coordinates of variable i live at
    // positions k*n + i)
    std::vector<double> vols(size_t(n), 1.0);
    long bound = 1;
    for (int i = 0; i < n; i++)
        for (int k = 0; k < d; k++) {
            long a = lo[size_t(k) * size_t(n) + size_t(i)],
                 b = hi[size_t(k) * size_t(n) + size_t(i)];
            if (b < a) return Int(0);
            vols[size_t(i)] *= double(b - a + 1);
            bound = std::max({bound, std::abs(a), std::abs(b)});
        }

    // greedy split: add variables to group A while its volume is smaller
    std::vector<int> order(size_t(n), 0);
    for (int i = 0; i < n; i++) order[size_t(i)] = i;
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return vols[size_t(a)] > vols[size_t(b)]; });
    std::vector<int> groupA, groupB;
    double va = 1, vb = 1;
    for (int i : order) {
        if (va <= vb) {
            groupA.push_back(i);
            va *= vols[size_t(i)];
        } else {
            groupB.push_back(i);
            vb *= vols[size_t(i)];
        }
    }
    // the hash table is built on the smaller group
    if (va > vb) {
        std::swap(groupA, groupB);
        std::swap(va, vb);
    }
    if (va > double(spec.map_budget))
        throw budget_exceeded("split counter map budget exceeded; repartition or raise it");

    // value of variable i at coordinates c[0..d): t_i(x_i) as an element
    // with int64 coordinates
    std::vector<long> gal;  // tau matrix
    if (diag->tau >= 0) {
        const QMat& M = K->galois()[size_t(diag->tau)];
        for (int i = 0; i < d; i++)
            for (int j = 0; j < d; j++) gal.push_back(M.at(i, j).get_num().get_si());
    }
    // int64 guard
    {
        Int maxcoef = 1;
        for (const auto& e : diag->a)
            for (int k = 0; k < d; k++) maxcoef = std::max(maxcoef, Int(abs(e.coord(k).get_num())));
        for (const auto& e : diag->b)
            for (int k = 0; k < d; k++) maxcoef = std::max(maxcoef, Int(abs(e.coord(k).get_num())));
        Int maxsc = 1;
        for (int i = 0; i < d; i++)
            for (int j = 0; j < d; j++)
                for (int k = 0; k < d; k++)
                    maxsc = std::max(maxsc, Int(abs(K->struct_const(i, j, k))));
        Int worst = Int(d) * d * d * maxcoef * maxsc * maxsc * bound * bound * long(n);
        if (worst > (Int(1) << 58))
            throw budget_exceeded("split counter coordinates too large for int64");
    }

    auto ring_mul = [&](const std::array<int64_t, 4>& a, const std::array<int64_t, 4>& b) {
        std::array<int64_t, 4> out{};
        for (int i = 0; i < d; i++) {
            if (!a[size_t(i)]) continue;
            for (int j = 0; j < d; j++) {
                if (!b[size_t(j)]) continue;
                int64_t f = a[size_t(i)] * b[size_t(j)];
                for (int k = 0; k < d; k++) {
                    const Int& s = K->struct_const(i, j, k);
                    if (s != 0) out[size_t(k)] += f * s.get_si();
                }
            }
        }
        return out;
    };
    auto var_value = [&](int i, const std::array<int64_t, 4>& x) {
        std::array<int64_t, 4> acoef{}, bcoef{};
        for (int k = 0; k < d; k++) acoef[size_t(k)] = diag->a[size_t(i)].coord(k).get_num().get_si();
        std::array<int64_t, 4> v = ring_mul(acoef, ring_mul(x, x));
        if (size_t(i) < diag->b.size()) {
            std::array<int64_t, 4> xt{};
            for (int r = 0; r < d; r++) {
                int64_t s = 0;
                for (int c = 0; c < d; c++) s += gal[size_t(r) * size_t(d) + size_t(c)] * x[size_t(c)];
                xt[size_t(r)] = s;
            }
            for (int k = 0; k < d; k++) bcoef[size_t(k)] = diag->b[size_t(i)].coord(k).get_num().get_si();
            std::array<int64_t, 4> w = ring_mul(bcoef, ring_mul(xt, xt));
            for (int k = 0; k < d; k++) v[size_t(k)] += w[size_t(k)];
        }
        return v;
    };

    // enumerate a group of variables, combining values
    auto enumerate_group = [&](const std::vector<int>& group,
                               const std::function<void(const VecKey&)>& emit) {
        // odometer over all coordinates of the group
        std::vector<std::pair<long, long>> ranges;
        for (int i : group)
            for (int k = 0; k < d; k++)
                ranges.push_back({lo[size_t(k) * size_t(n) + size_t(i)],
                                  hi[size_t(k) * size_t(n) + size_t(i)]});
        std::vector<long> cur(ranges.size(), 0);
        for (size_t j = 0; j < ranges.size(); j++) cur[j] = ranges[j].first;
        while (true) {
            VecKey key{};
            for (size_t gi = 0; gi < group.size(); gi++) {
                std::array<int64_t, 4> x{};
                for (int k = 0; k < d; k++) x[size_t(k)] = cur[gi * size_t(d) + size_t(k)];
                auto v = var_value(group[gi], x);
                for (int k = 0; k < d; k++) key.v[size_t(k)] += v[size_t(k)];
            }
            emit(key);
            size_t pos = 0;
            while (pos < ranges.size()) {
                cur[pos]++;
                if (cur[pos] <= ranges[pos].second) break;
                cur[pos] = ranges[pos].first;
                pos++;
            }
            if (pos == ranges.size()) break;
        }
    };

    std::unordered_map<VecKey, long, VecKeyHash> table;
    table.reserve(size_t(va) * 2);
    enumerate_group(groupA, [&](const VecKey& k) { table[k]++; });

    VecKey targetN{};
    for (int k = 0; k < d; k++) targetN.v[size_t(k)] = spec.N.coord(k).get_num().get_si();

    Int total = 0;
    if (groupB.empty()) {
        auto it = table.find(targetN);
        if (it != table.end()) total = it->second;
    } else {
        enumerate_group(groupB, [&](const VecKey& k) {
            VecKey need{};
            for (int kk = 0; kk < d; kk++) need.v[size_t(kk)] = targetN.v[size_t(kk)] - k.v[size_t(kk)];
            auto it = table.find(need);
            if (it != table.end()) total += it->second;
        });
    }
    return total;
}

CompareRecord compare_to_prediction(const CountSpec& spec, const MainTerm& mt) {
    CompareRecord rec;
    rec.P = spec.P;
    Int count;
    try {
        count = count_split_diagonal(spec);
    } catch (const invalid_input&) {
        count = count_direct(spec).count;
    }
    rec.count = count;
    rec.predicted = mt.predicted;
    double errp = mt.stderr_ * std::pow(mt.P, double((spec.F.vars() - 2) *
                                                     spec.F.field()->degree()));
    double c = count.get_d();
    rec.ratio = (rec.predicted != 0) ? c / rec.predicted : (c == 0 ? 1.0 : INFINITY);
    if (rec.predicted > errp && rec.predicted > 0) {
        rec.ratio_lo = c / (rec.predicted + errp);
        rec.ratio_hi = c / (rec.predicted - errp);
    } else {
        rec.ratio_lo = rec.ratio_hi = rec.ratio;
    }
    return rec;
}

}  // namespace gqf
