#include "dlab/models.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace dlab::models {

namespace {

ad::Activation mlp_activation(Family f) {
    switch (f) {
        case Family::relu: return ad::Activation::relu;
        case Family::tanh: return ad::Activation::tanh;
        case Family::sigmoid: return ad::Activation::sigmoid;
        default: throw std::logic_error("mlp_activation: not a pointwise family");
    }
}

ad::Activation gate_activation(Family f) {
    switch (f) {
        case Family::swiglu: return ad::Activation::silu;
        case Family::geglu: return ad::Activation::gelu;
        default: throw std::logic_error("gate_activation: not a gated family");
    }
}

}  // namespace

Family family_from_name(const std::string& name) {
    if (name == "bilinear") return Family::bilinear;
    if (name == "swiglu") return Family::swiglu;
    if (name == "geglu") return Family::geglu;
    if (name == "relu") return Family::relu;
    if (name == "tanh") return Family::tanh;
    if (name == "sigmoid") return Family::sigmoid;
    throw std::invalid_argument("unknown model family: " + name);
}

const char* family_name(Family f) {
    switch (f) {
        case Family::bilinear: return "bilinear";
        case Family::swiglu: return "swiglu";
        case Family::geglu: return "geglu";
        case Family::relu: return "relu";
        case Family::tanh: return "tanh";
        case Family::sigmoid: return "sigmoid";
    }
    return "?";
}

bool is_multiplicative(Family f) {
    return f == Family::bilinear || f == Family::swiglu || f == Family::geglu;
}

bool is_pointwise(Family f) {
    return f == Family::relu || f == Family::tanh || f == Family::sigmoid;
}

void ModelSpec::validate() const {
    if (hidden <= 0 || output <= 0) {
        throw std::invalid_argument("ModelSpec: hidden and output must be positive");
    }
    switch (input_mode) {
        case InputMode::pair_embed:
            if (family != Family::bilinear) {
                throw std::invalid_argument(
                    "ModelSpec: pair-embed input is reserved for the bilinear family; " +
                    std::string(family_name(family)) + " takes concatenated embeddings");
            }
            [[fallthrough]];
        case InputMode::concat_embed:
            if (input_mode == InputMode::concat_embed && family == Family::bilinear) {
                throw std::invalid_argument(
                    "ModelSpec: bilinear uses separate projections (pair-embed), not concat");
            }
            if (vocab <= 0 || embed_dim <= 0) {
                throw std::invalid_argument("ModelSpec: embedding modes need vocab and embed_dim");
            }
            break;
        case InputMode::raw_vector:
            if (in1 <= 0) throw std::invalid_argument("ModelSpec: raw_vector needs in1");
            break;
        case InputMode::raw_split:
            if (family != Family::bilinear) {
                throw std::invalid_argument("ModelSpec: raw_split requires the bilinear family");
            }
            if (in1 <= 0 || in2 <= 0) {
                throw std::invalid_argument("ModelSpec: raw_split needs in1 and in2");
            }
            break;
    }
    if (head == Head::scalar && output != 1) {
        throw std::invalid_argument("ModelSpec: scalar head implies output == 1");
    }
    if (out_bias && (is_multiplicative(family) || head == Head::classifier)) {
        throw std::invalid_argument("ModelSpec: out_bias only on pointwise regression models");
    }
}

Matrix& ModelParams::at(const std::string& name) {
    auto it = mat.find(name);
    if (it == mat.end()) throw std::out_of_range("ModelParams: no parameter '" + name + "'");
    return it->second;
}

const Matrix& ModelParams::at(const std::string& name) const {
    auto it = mat.find(name);
    if (it == mat.end()) throw std::out_of_range("ModelParams: no parameter '" + name + "'");
    return it->second;
}

int ModelParams::total_count() const {
    int n = 0;
    for (const auto& [name, m] : mat) n += static_cast<int>(m.size());
    return n;
}

namespace {

// input width seen by w1/w2 (and b1) for each mode
int path_width(const ModelSpec& s, bool second_path) {
    switch (s.input_mode) {
        case InputMode::pair_embed: return s.embed_dim;
        case InputMode::concat_embed: return 2 * s.embed_dim;
        case InputMode::raw_vector: return s.in1 + s.in2;
        case InputMode::raw_split: return second_path ? s.in2 : s.in1;
    }
    return 0;
}

}  // namespace

int expected_param_count(const ModelSpec& s) {
    int n = 0;
    if (s.uses_embedding()) n += s.vocab * s.embed_dim;
    if (is_pointwise(s.family)) {
        n += path_width(s, false) * s.hidden + s.hidden;  // w1 + b1
    } else {
        n += path_width(s, false) * s.hidden + path_width(s, true) * s.hidden;  // w1 + w2
    }
    n += s.hidden * s.output;
    if (s.out_bias) n += s.output;
    return n;
}

ModelParams init(const ModelSpec& spec, uint64_t seed, InitScheme scheme) {
    spec.validate();
    Rng rng(seed);
    ModelParams p;

    auto linear = [&](int fan_in, int fan_out) {
        if (scheme == InitScheme::kaiming_normalized) {
            return rng.normal_matrix(fan_in, fan_out, std::sqrt(2.0 / fan_in));
        }
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        return rng.uniform_matrix(fan_in, fan_out, -bound, bound);
    };

    // deterministic creation order: embed, w1, (b1|w2), w_out, b_out
    if (spec.uses_embedding()) {
        Matrix e = rng.normal_matrix(spec.vocab, spec.embed_dim);
        if (scheme == InitScheme::kaiming_normalized) {
            for (int i = 0; i < e.rows; ++i) {
                double nrm = 0.0;
                for (int j = 0; j < e.cols; ++j) nrm += e.at(i, j) * e.at(i, j);
                nrm = std::sqrt(nrm);
                if (nrm > 0.0) {
                    for (int j = 0; j < e.cols; ++j) e.at(i, j) /= nrm;
                }
            }
        }
        p.mat["embed"] = std::move(e);
    }
    p.mat["w1"] = linear(path_width(spec, false), spec.hidden);
    if (is_pointwise(spec.family)) {
        p.mat["b1"] = Matrix(1, spec.hidden);
    } else {
        p.mat["w2"] = linear(path_width(spec, true), spec.hidden);
    }
    if (scheme == InitScheme::kaiming_normalized) {
        p.mat["w_out"] = rng.normal_matrix(spec.hidden, spec.output, 0.1);
    } else {
        p.mat["w_out"] = linear(spec.hidden, spec.output);
    }
    if (spec.out_bias) p.mat["b_out"] = Matrix(1, spec.output);

    if (p.total_count() != expected_param_count(spec)) {
        throw std::logic_error("init: parameter count " + std::to_string(p.total_count()) +
                               " does not match the documented formula " +
                               std::to_string(expected_param_count(spec)));
    }
    return p;
}

int Batch::size() const {
    if (!tok_a.empty()) return static_cast<int>(tok_a.size());
    return x1.rows;
}

ad::Var BoundModel::var(const std::string& name) const {
    auto it = vars.find(name);
    if (it == vars.end()) throw std::out_of_range("BoundModel: no parameter '" + name + "'");
    return it->second;
}

std::vector<ad::Var> BoundModel::all_vars() const {
    std::vector<ad::Var> v;
    v.reserve(vars.size());
    for (const auto& [name, var] : vars) v.push_back(var);
    return v;
}

BoundModel bind(ad::Tape& tape, const ModelSpec& spec, const ModelParams& params) {
    BoundModel m;
    m.spec = spec;
    for (const auto& [name, mat] : params.mat) m.vars[name] = tape.param(mat);
    return m;
}

ad::Var forward(ad::Tape& t, const BoundModel& m, const Batch& batch) {
    const ModelSpec& s = m.spec;

    ad::Var h;
    if (s.family == Family::bilinear) {
        ad::Var a, b;
        if (s.input_mode == InputMode::pair_embed) {
            a = ad::embed(t, m.var("embed"), batch.tok_a);
            b = ad::embed(t, m.var("embed"), batch.tok_b);
        } else if (s.input_mode == InputMode::raw_split) {
            a = t.constant(batch.x1);
            b = t.constant(batch.x2);
        } else {  // raw_vector: both projections see the full input
            ad::Var x = t.constant(batch.x2.empty() ? batch.x1 : hcat(batch.x1, batch.x2));
            a = x;
            b = x;
        }
        h = ad::hadamard(t, ad::matmul(t, a, m.var("w1")), ad::matmul(t, b, m.var("w2")));
    } else {
        ad::Var x;
        if (s.input_mode == InputMode::concat_embed) {
            ad::Var ea = ad::embed(t, m.var("embed"), batch.tok_a);
            ad::Var eb = ad::embed(t, m.var("embed"), batch.tok_b);
            x = ad::concat_cols(t, ea, eb);
        } else {
            x = t.constant(batch.x2.empty() ? batch.x1 : hcat(batch.x1, batch.x2));
        }
        if (is_pointwise(s.family)) {
            ad::Var pre = ad::add_row_bias(t, ad::matmul(t, x, m.var("w1")), m.var("b1"));
            h = ad::activation(t, mlp_activation(s.family), pre);
        } else {
            ad::Var u = ad::matmul(t, x, m.var("w1"));
            ad::Var v = ad::matmul(t, x, m.var("w2"));
            h = ad::hadamard(t, u, ad::activation(t, gate_activation(s.family), v));
        }
    }

    ad::Var out = ad::matmul(t, h, m.var("w_out"));
    if (s.out_bias) out = ad::add_row_bias(t, out, m.var("b_out"));
    return out;
}

Matrix forward_eval(const ModelSpec& spec, const ModelParams& params, const Batch& batch) {
    ad::Tape t;
    BoundModel m;
    m.spec = spec;
    for (const auto& [name, mat] : params.mat) m.vars[name] = t.constant(mat);
    return t.value(forward(t, m, batch));
}

Matrix extract_bilinear_interaction(const ModelSpec& spec, const ModelParams& params) {
    if (spec.head != Head::scalar) {
        throw std::invalid_argument(
            "extract_bilinear_interaction: classifier head needs an output direction alpha");
    }
    return extract_bilinear_interaction(spec, params, {1.0});
}

Matrix extract_bilinear_interaction(const ModelSpec& spec, const ModelParams& params,
                                    const std::vector<double>& alpha) {
    if (spec.family != Family::bilinear) {
        throw std::invalid_argument(std::string("extract_bilinear_interaction: family is ") +
                                    family_name(spec.family) + ", not bilinear");
    }
    const Matrix& w1 = params.at("w1");
    const Matrix& w2 = params.at("w2");
    const Matrix& w_out = params.at("w_out");
    if (static_cast<int>(alpha.size()) != w_out.cols) {
        throw std::invalid_argument("extract_bilinear_interaction: alpha length " +
                                    std::to_string(alpha.size()) + " vs " +
                                    std::to_string(w_out.cols) + " outputs");
    }
    // effective per-hidden weight along the alpha direction: w = W_out * alpha
    std::vector<double> w(w1.cols, 0.0);
    for (int hidx = 0; hidx < w_out.rows; ++hidx) {
        for (int k = 0; k < w_out.cols; ++k) w[hidx] += w_out.at(hidx, k) * alpha[k];
    }
    // M = W1 * diag(w) * W2^T, so y(a,b) = x1^T M x2
    Matrix scaled = w1;
    for (int i = 0; i < scaled.rows; ++i) {
        for (int hidx = 0; hidx < scaled.cols; ++hidx) scaled.at(i, hidx) *= w[hidx];
    }
    return matmul_nt(scaled, w2);
}

Matrix interaction_token_space(const ModelSpec& spec, const ModelParams& params) {
    const Matrix m = extract_bilinear_interaction(spec, params);
    const Matrix& e = params.at("embed");
    return matmul_nt(matmul(e, m), e);
}

Matrix logit_grid(const ModelSpec& spec, const ModelParams& params, int p) {
    if (spec.head != Head::classifier) {
        throw std::invalid_argument("logit_grid: classifier head required");
    }
    Batch batch;
    batch.tok_a.reserve(static_cast<size_t>(p) * p);
    batch.tok_b.reserve(static_cast<size_t>(p) * p);
    for (int a = 0; a < p; ++a) {
        for (int b = 0; b < p; ++b) {
            batch.tok_a.push_back(a);
            batch.tok_b.push_back(b);
        }
    }
    return forward_eval(spec, params, batch);
}

Matrix class_interaction_matrix(const ModelSpec& spec, const ModelParams& params, int k) {
    const int p = spec.output;
    if (k < 0 || k >= p) {
        throw std::out_of_range("class_interaction_matrix: class " + std::to_string(k) +
                                " outside [0," + std::to_string(p) + ")");
    }
    const Matrix grid = logit_grid(spec, params, p);
    Matrix mk(p, p);
    for (int a = 0; a < p; ++a) {
        for (int b = 0; b < p; ++b) mk.at(a, b) = grid.at(a * p + b, k);
    }
    return mk;
}

std::vector<Matrix> all_class_interaction_matrices(const ModelSpec& spec,
                                                   const ModelParams& params, int p) {
    const Matrix grid = logit_grid(spec, params, p);
    std::vector<Matrix> out(p, Matrix(p, p));
    for (int k = 0; k < p; ++k) {
        for (int a = 0; a < p; ++a) {
            for (int b = 0; b < p; ++b) out[k].at(a, b) = grid.at(a * p + b, k);
        }
    }
    return out;
}

double probe_interaction_score(const ModelSpec& spec, const ModelParams& params,
                               const Matrix& u, const Matrix& v) {
    if (spec.head != Head::scalar) {
        throw std::invalid_argument("probe_interaction_score: scalar head required");
    }
    if (u.rows != 1 || v.rows != 1) {
        throw std::invalid_argument("probe_interaction_score: u and v must be row vectors");
    }
    Batch b;
    b.x1 = u;
    b.x2 = v;
    if (spec.input_mode == InputMode::raw_vector && u.cols + v.cols != spec.in1 + spec.in2) {
        throw std::invalid_argument("probe_interaction_score: probe width " +
                                    std::to_string(u.cols + v.cols) + " vs model input " +
                                    std::to_string(spec.in1 + spec.in2));
    }
    return forward_eval(spec, params, b).at(0, 0);
}

void save_params(const ModelParams& params, const std::string& path) {
    nlohmann::json j;
    for (const auto& [name, m] : params.mat) {
        j[name] = {{"shape", {m.rows, m.cols}}, {"data", m.data}};
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_params: cannot open " + path);
    out << j.dump(2) << "\n";
}

ModelParams load_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_params: cannot open " + path);
    nlohmann::json j;
    in >> j;
    ModelParams p;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& shape = it.value().at("shape");
        std::vector<double> data = it.value().at("data").get<std::vector<double>>();
        p.mat[it.key()] = Matrix(shape.at(0).get<int>(), shape.at(1).get<int>(), std::move(data));
    }
    return p;
}

}  // namespace dlab::models
