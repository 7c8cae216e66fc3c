// Residual reports and the seeded sampler shared by all verification suites.

#ifndef DYNYB_REPORT_HPP
#define DYNYB_REPORT_HPP

#include <json.hpp>

#include <chrono>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "elliptic.hpp"

namespace dynyb {

struct pole_proximity : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct pole_exhaustion : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr double pole_rel_threshold = 1e-8;
inline constexpr int max_resamples = 100;

// Throws pole_proximity if |den| is tiny relative to `scale`.
inline cplx guard(cplx den, double scale, const char* what) {
    if (!(std::abs(den) >= pole_rel_threshold * std::max(scale, 1e-300)) || !std::isfinite(std::abs(den)))
        throw pole_proximity(std::string("pole guard: ") + what);
    return den;
}

// mt19937_64 with an explicit double conversion so that streams agree across
// standard libraries.
class Sampler {
public:
    explicit Sampler(std::uint64_t seed) : rng_(seed) {}
    double uniform() { return double(rng_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Spectral parameter in [0.05, 0.95] x [-0.2, 0.2] i, scaled by `scale`.
    cplx spectral(double scale = 1.0) { return scale * cplx(uniform(0.05, 0.95), uniform(-0.2, 0.2)); }
    std::uint64_t raw() { return rng_(); }

private:
    std::mt19937_64 rng_;
};

struct CheckResult {
    std::string name;
    double residual = 0.0;
    double tol = 0.0;
    bool pass = false;
};

inline CheckResult make_check(std::string name, double residual, double tol) {
    return {std::move(name), residual, tol, residual < tol};
}

struct Report {
    std::string suite;
    std::vector<CheckResult> checks;
    int samples = 0;
    int resamples = 0;
    double wall_time = 0.0;
    std::vector<std::string> notes;

    bool pass() const {
        if (checks.empty()) return false;
        for (auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
    void add(const CheckResult& c) { checks.push_back(c); }
    void add(std::string name, double residual, double tol) { checks.push_back(make_check(std::move(name), residual, tol)); }
    void merge(const Report& o, const std::string& prefix = {}) {
        for (auto c : o.checks) {
            if (!prefix.empty()) c.name = prefix + "/" + c.name;
            checks.push_back(c);
        }
        samples += o.samples;
        resamples += o.resamples;
        notes.insert(notes.end(), o.notes.begin(), o.notes.end());
    }

    nlohmann::ordered_json to_json(bool with_time = true) const {
        nlohmann::ordered_json j;
        j["suite"] = suite;
        auto arr = nlohmann::ordered_json::array();
        for (auto& c : checks) {
            nlohmann::ordered_json e;
            e["name"] = c.name;
            e["residual"] = c.residual;
            e["tol"] = c.tol;
            e["pass"] = c.pass;
            arr.push_back(e);
        }
        j["checks"] = arr;
        j["pass"] = pass();
        j["samples"] = samples;
        j["resamples"] = resamples;
        if (!notes.empty()) j["notes"] = notes;
        if (with_time) j["wall_time"] = wall_time;
        return j;
    }
};

// Runs f(sampler) `samples` times and keeps the maximum residual. A sample
// that hits a pole guard is redrawn, at most max_resamples times.
template <class F>
CheckResult sweep(Report& rep, const std::string& name, int samples, double tol, Sampler& s, F&& f) {
    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
        int tries = 0;
        for (;;) {
            try {
                worst = std::max(worst, double(f(s)));
                break;
            } catch (const pole_proximity&) {
                ++rep.resamples;
                if (++tries > max_resamples) throw pole_exhaustion(name + ": " + std::to_string(max_resamples) + " resamples failed");
            }
        }
        ++rep.samples;
    }
    auto c = make_check(name, worst, tol);
    if (!std::isfinite(worst)) c.pass = false;
    rep.add(c);
    return c;
}

class Stopwatch {
public:
    Stopwatch() : t0_(std::chrono::steady_clock::now()) {}
    double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count(); }

private:
    std::chrono::steady_clock::time_point t0_;
};

}  // namespace dynyb

#endif
