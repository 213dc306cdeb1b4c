#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedtrace/model.hpp"
#include "fedtrace/tensor.hpp"

namespace fedtrace {

// Per-client identity: a +/-1 code, a secret Gaussian key, and the margin
// used when writing the code into the BN scales.
struct FingerprintRecord {
    int client_id = 0;
    std::vector<std::int8_t> code; // entries in {-1, +1}
    Tensor2 key;                   // M x N
    float margin = 0.1f;
};

struct GaParams {
    int population = 64;
    int generations = 200;
    double mutation_rate = -1.0; // < 0: use 1/(K*N)
    int tournament_k = 3;
    double crossover_rate = 0.9;
    std::uint64_t seed = 0;
};

struct FingerprintConfig {
    int bits = 128;
    float fp_lr = 0.05f;
    float fss_threshold = 0.95f;
    int max_iter = 500;
    float margin = 0.1f;
    GaParams ga;
};

// number of positions where the codes differ
int hamming(std::span<const std::int8_t> a, std::span<const std::int8_t> b);

// Maximises the minimal pairwise Hamming distance over K codes of N bits
// with a genetic search (tournament selection, uniform crossover over the
// whole code set, per-bit mutation). Returns the best individual ever seen;
// deterministic per seed.
std::vector<std::vector<std::int8_t>> generate_codes(int K, int N, const GaParams& ga);

// Codes from generate_codes plus i.i.d. standard-normal keys. Warns on
// stderr when K*N <= M (a single scale vector could then fit every code).
std::vector<FingerprintRecord> gen_fingerprints(int K, int N, std::size_t M, float margin,
                                                const GaParams& ga, std::uint64_t key_seed);

// B = A^T w  (key contracted against the BN scale vector)
std::vector<double> response(const Tensor2& key, std::span<const float> w_gamma);

// sum_j max(margin - b_j f_j, 0)
double hinge_loss(const Tensor2& key, std::span<const std::int8_t> code,
                  std::span<const float> w_gamma, float margin);

// Fingerprint similarity: sum_j min(margin, b_j f_j) / (N * margin).
// 1.0 exactly when every bit meets the margin.
double fss(const Tensor2& key, std::span<const std::int8_t> code,
           std::span<const float> w_gamma, float margin);

struct LinsertStats {
    int iterations = 0;
    double fss = 0.0;
    bool reached_threshold = false;
};

// Gradient descent on the hinge loss over the BN scales only; stops when
// fss reaches the threshold, on max_iter, or when a fixed step would
// increase the loss. Everything but BN gamma is left bit-identical.
LinsertStats linsert(BnMlpModel& model, const FingerprintRecord& record,
                     const FingerprintConfig& cfg);

struct TraceResult {
    int client_id = -1;
    std::vector<double> scores; // fss per record, record order
    bool tie = false;
};

TraceResult trace(std::span<const float> w_gamma, std::span<const FingerprintRecord> records);
TraceResult trace(const BnMlpModel& model, std::span<const FingerprintRecord> records);

// fraction of models whose best-FSS record is their own
double traceability_rate(std::span<const BnMlpModel> models,
                         std::span<const FingerprintRecord> records);

struct HdTraceResult {
    int client_id = -1;
    std::vector<int> distances; // Hamming distance per record
    bool ambiguous = false;     // >= 2 records at the minimal distance
};

// Baseline tracer: argmin of HD(sgn(A^T w), F_i). sgn(0) counts as +1.
HdTraceResult hd_trace(std::span<const float> w_gamma,
                       std::span<const FingerprintRecord> records);

// records.json (codes as +/- strings, margin, client ids) plus a sidecar
// .ftck blob holding the key matrices
void save_records(const std::string& json_path, const std::string& keys_path,
                  std::span<const FingerprintRecord> records);
std::vector<FingerprintRecord> load_records(const std::string& json_path);

} // namespace fedtrace
