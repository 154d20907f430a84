#include "trackjam/poisson_binomial.hpp"

#include <array>
#include <stdexcept>

namespace trackjam {

std::vector<double> poisson_binomial_pmf(std::span<const double> p) {
    std::vector<double> f(p.size() + 1, 0.0);
    f[0] = 1.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double pi = p[i];
        for (std::size_t k = i + 1; k > 0; --k) {
            f[k] = f[k] * (1.0 - pi) + f[k - 1] * pi;
        }
        f[0] *= 1.0 - pi;
    }
    return f;
}

double xi_exactly_m(std::span<const double> p, std::size_t m) {
    if (m > p.size()) {
        throw std::invalid_argument("xi_exactly_m: m exceeds the number of agents");
    }
    return poisson_binomial_pmf(p)[m];
}

double objective_at_least_n(std::span<const double> p, std::size_t n) {
    if (n == 0) {
        return 1.0;
    }
    if (n > p.size()) {
        return 0.0;
    }
    constexpr std::size_t kInline = 32;
    std::array<double, kInline + 1> buffer{};
    std::vector<double> heap;
    double* f = buffer.data();
    if (p.size() > kInline) {
        heap.assign(p.size() + 1, 0.0);
        f = heap.data();
    }
    f[0] = 1.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double pi = p[i];
        f[i + 1] = 0.0;
        for (std::size_t k = i + 1; k > 0; --k) {
            f[k] = f[k] * (1.0 - pi) + f[k - 1] * pi;
        }
        f[0] *= 1.0 - pi;
    }
    double tail = 0.0;
    for (std::size_t m = p.size(); m >= n; --m) {
        tail += f[m];
    }
    return tail;
}

}  // namespace trackjam
