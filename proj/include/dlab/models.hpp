#pragma once

#include <map>
#include <string>
#include <vector>

#include "dlab/autodiff.hpp"
#include "dlab/matrix.hpp"
#include "dlab/rng.hpp"

namespace dlab::models {

enum class Family { bilinear, swiglu, geglu, relu, tanh, sigmoid };
enum class InputMode { pair_embed, concat_embed, raw_vector, raw_split };
enum class Head { classifier, regression, scalar };
enum class InitScheme { table_default, kaiming_normalized };

Family family_from_name(const std::string& name);
const char* family_name(Family f);
bool is_multiplicative(Family f);
bool is_pointwise(Family f);

// Architecture description. Dimensions:
//   vocab/embed_dim  — embedding table (pair_embed / concat_embed modes)
//   in1/in2          — raw input widths (raw_vector uses in1 as the total
//                      width; raw_split feeds in1 and in2 to separate paths)
//   hidden/output    — hidden units m, output width C
struct ModelSpec {
    Family family = Family::bilinear;
    InputMode input_mode = InputMode::pair_embed;
    int vocab = 0;
    int embed_dim = 0;
    int in1 = 0;
    int in2 = 0;
    int hidden = 0;
    int output = 0;
    Head head = Head::classifier;
    bool out_bias = false;

    void validate() const;
    bool uses_embedding() const {
        return input_mode == InputMode::pair_embed || input_mode == InputMode::concat_embed;
    }
};

// Named parameter matrices of one model instance. Keys: embed, w1, w2, b1,
// w_out, b_out (the subset depends on the ModelSpec).
struct ModelParams {
    std::map<std::string, Matrix> mat;

    Matrix& at(const std::string& name);
    const Matrix& at(const std::string& name) const;
    bool has(const std::string& name) const { return mat.count(name) > 0; }
    int total_count() const;
};

int expected_param_count(const ModelSpec& spec);

ModelParams init(const ModelSpec& spec, uint64_t seed,
                 InitScheme scheme = InitScheme::table_default);

// One training/eval batch; which fields are set depends on the input mode.
struct Batch {
    std::vector<int> tok_a, tok_b;  // embedding modes
    Matrix x1, x2;                  // raw modes (x2 also used by raw_vector, concatenated)
    std::vector<int> labels;        // classifier targets
    Matrix targets;                 // regression / scalar targets

    int size() const;
};

// Model parameters placed on a tape as differentiable leaves.
struct BoundModel {
    ModelSpec spec;
    std::map<std::string, ad::Var> vars;

    ad::Var var(const std::string& name) const;
    std::vector<ad::Var> all_vars() const;
};

BoundModel bind(ad::Tape& tape, const ModelSpec& spec, const ModelParams& params);
ad::Var forward(ad::Tape& tape, const BoundModel& model, const Batch& batch);

// Inference without gradient bookkeeping.
Matrix forward_eval(const ModelSpec& spec, const ModelParams& params, const Batch& batch);

// Interaction operator of a bilinear model: M with y(a,b) = x1^T M x2 for the
// scalar head, or the alpha-weighted combination of per-class operators for a
// classifier head.
Matrix extract_bilinear_interaction(const ModelSpec& spec, const ModelParams& params);
Matrix extract_bilinear_interaction(const ModelSpec& spec, const ModelParams& params,
                                    const std::vector<double>& alpha);
// Pullback through the embedding table: E * M * E^T, scoring token pairs.
Matrix interaction_token_space(const ModelSpec& spec, const ModelParams& params);

// Logits over the full (a, b) grid for a classifier over Z_p; row a*p+b.
Matrix logit_grid(const ModelSpec& spec, const ModelParams& params, int p);
// M_k[a, b] = logit_k(a, b)
Matrix class_interaction_matrix(const ModelSpec& spec, const ModelParams& params, int k);
std::vector<Matrix> all_class_interaction_matrices(const ModelSpec& spec,
                                                   const ModelParams& params, int p);

// Scalar-head probe: one forward pass on the given direction pair.
double probe_interaction_score(const ModelSpec& spec, const ModelParams& params,
                               const Matrix& u, const Matrix& v);

void save_params(const ModelParams& params, const std::string& path);
ModelParams load_params(const std::string& path);

}  // namespace dlab::models
