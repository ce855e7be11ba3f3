#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <queue>
#include <vector>

namespace lobsurv::quad {

/// Adaptive Gauss-Kronrod (G7/K15) integration of a vector-valued integrand.
/// Subdivides the interval with the largest error estimate until the summed
/// error satisfies max(abs_tol, rel_tol * |I|) componentwise, or
/// `max_intervals` is reached.
template <std::size_t N>
struct Result {
    std::array<double, N> value{};
    std::array<double, N> error{};
    int intervals = 0;
};

namespace detail {

inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851, 0.864864423359769072789712788640926,
    0.741531185599394439863864773280788, 0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204, 0.104790010322250183839876322541518,
    0.140653259715525918745189590510238, 0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                              0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <std::size_t N>
struct Segment {
    double a, b;
    std::array<double, N> value, error;
    double worst;
    bool operator<(const Segment& o) const { return worst < o.worst; }
};

template <std::size_t N, class F>
Segment<N> gk15(F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    std::array<double, N> fc = f(c);
    std::array<double, N> kron{}, gauss{};
    for (std::size_t k = 0; k < N; ++k) {
        kron[k] = fc[k] * kWgk[7];
        gauss[k] = fc[k] * kWg[3];
    }
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kXgk[static_cast<std::size_t>(j)];
        auto f1 = f(c - dx);
        auto f2 = f(c + dx);
        for (std::size_t k = 0; k < N; ++k) {
            const double s = f1[k] + f2[k];
            kron[k] += kWgk[static_cast<std::size_t>(j)] * s;
            if (j % 2 == 1) gauss[k] += kWg[static_cast<std::size_t>(j / 2)] * s;
        }
    }
    Segment<N> seg{a, b, {}, {}, 0.0};
    for (std::size_t k = 0; k < N; ++k) {
        seg.value[k] = kron[k] * h;
        seg.error[k] = std::abs((kron[k] - gauss[k]) * h);
        seg.worst = std::max(seg.worst, seg.error[k]);
    }
    return seg;
}

}  // namespace detail

template <std::size_t N, class F>
Result<N> integrate(F&& f, double a, double b, double abs_tol, double rel_tol, int max_intervals = 200) {
    std::priority_queue<detail::Segment<N>> heap;
    heap.push(detail::gk15<N>(f, a, b));
    std::array<double, N> total = heap.top().value;
    std::array<double, N> err = heap.top().error;
    int count = 1;
    auto converged = [&] {
        for (std::size_t k = 0; k < N; ++k) {
            if (err[k] > std::max(abs_tol, rel_tol * std::abs(total[k]))) return false;
        }
        return true;
    };
    while (!converged() && count < max_intervals) {
        auto worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        auto left = detail::gk15<N>(f, worst.a, mid);
        auto right = detail::gk15<N>(f, mid, worst.b);
        for (std::size_t k = 0; k < N; ++k) {
            total[k] += left.value[k] + right.value[k] - worst.value[k];
            err[k] += left.error[k] + right.error[k] - worst.error[k];
        }
        heap.push(left);
        heap.push(right);
        ++count;
    }
    // Re-sum to shed the drift of incremental updates.
    Result<N> out;
    out.intervals = count;
    while (!heap.empty()) {
        const auto& s = heap.top();
        for (std::size_t k = 0; k < N; ++k) {
            out.value[k] += s.value[k];
            out.error[k] += s.error[k];
        }
        heap.pop();
    }
    return out;
}

}  // namespace lobsurv::quad
