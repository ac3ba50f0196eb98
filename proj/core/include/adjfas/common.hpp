#ifndef ADJFAS_COMMON_HPP
#define ADJFAS_COMMON_HPP

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace adjfas {

/// Probability vector over the categories of one variable.
using Distribution = std::vector<double>;

/// Engine used for every random stream in the library. Streams are always
/// created from an explicit seed; nothing reads global state.
using Rng = std::mt19937_64;

// Error hierarchy. The CLI maps these onto stable exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class SchemaError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class LookupError : public Error {
public:
    using Error::Error;
};

class InfeasibleSelection : public Error {
public:
    InfeasibleSelection(const std::string& msg, std::string variable, int category)
        : Error(msg), variable_(std::move(variable)), category_(category) {}
    const std::string& variable() const { return variable_; }
    int category() const { return category_; }

private:
    std::string variable_;
    int category_;
};

class EnumerationRefused : public Error {
public:
    using Error::Error;
};

/// Raised when every Monte-Carlo iteration of an arm score hit a
/// zero-probability stratum.
class DegenerateScore : public Error {
public:
    using Error::Error;
};

/// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives a child seed from a parent seed and a path of indices. The result
/// only depends on the arguments, so work items can be scheduled freely.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = mix64(seed);
    for (auto p : path) s = mix64(s ^ mix64(p + 0x632be59bd9b4e019ULL));
    return s;
}

/// Numerically stable log(sum(exp(v))). Returns -inf for an empty or all -inf input.
double log_sum_exp(const std::vector<double>& v);

/// Runs fn(0..n-1) on up to `threads` worker threads. Each index must write
/// only to its own output slot. If any call throws, the exception of the
/// lowest failing index is rethrown after all workers finish.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

/// Thread budget: explicit value if positive, else $ADJFAS_THREADS, else 1.
int resolve_threads(int requested);

}  // namespace adjfas

#endif  // ADJFAS_COMMON_HPP
