#pragma once

#include "common.hpp"

#include <functional>
#include <iosfwd>
#include <random>
#include <unordered_map>

namespace ttag {

// Named parameter tensor with gradient and optimizer state.
struct Tensor {
    std::string name;
    Mat value;
    Mat grad;
    Mat adam_m;
    Mat adam_v;
};

class ParamStore {
  public:
    int add(const std::string& name, Eigen::Index rows, Eigen::Index cols);
    int add_init(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                 std::mt19937_64& rng, double scale = 0.0);

    Tensor& operator[](int i) { return tensors_[size_t(i)]; }
    const Tensor& operator[](int i) const { return tensors_[size_t(i)]; }
    size_t size() const { return tensors_.size(); }
    int find(const std::string& name) const;

    void zero_grads();
    // weight_decay is decoupled (applied to the value directly, not the
    // gradient), so the adaptive moments never see it.
    void adam_step(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8,
                   double weight_decay = 0.0);
    size_t num_scalars() const;

    // Raw tensor payloads, row-major little-endian float32, in creation
    // order; callers frame these with their own headers.
    void save_tensors(std::ostream& out) const;
    void load_tensors(std::istream& in);

  private:
    std::vector<Tensor> tensors_;
    int64_t adam_t_ = 0;
};

// Reverse-mode tape over column vectors. Parameter gradients accumulate
// directly into the bound ParamStore.
class Tape {
  public:
    explicit Tape(ParamStore* ps) : ps_(ps) {}

    int constant(Vec v);
    // W x + b
    int affine(int w_param, int b_param, int x);
    int matvec(int w_param, int x);
    int add(int a, int b);
    int mean(std::vector<int> xs);
    int relu(int x);
    int leaky_relu(int x, double alpha);
    int dot(int a, int b);              // 1-d result
    int param_dot(int a_param, int x);  // aᵀx, a is a parameter column
    // Mean of the given rows of a parameter table (empty ids -> zero).
    int token_mean(int table_param, const std::vector<uint32_t>& ids, Eigen::Index dim);
    // softmax(scores)-weighted sum of msgs; scores are 1-d nodes.
    int attention(const std::vector<int>& scores, const std::vector<int>& msgs);
    int normalize(int x);  // zero vector maps to zero

    const Vec& value(int id) const { return nodes_[size_t(id)].val; }
    double input_norm(int normalize_id) const;  // pre-normalization norm

    // Seeds d(out)/d(out) = out_grad and runs the tape backwards. May be
    // called several times (e.g. once per query embedding); node grads
    // reset on each call, parameter grads accumulate.
    void backward(int output, const Vec& out_grad);

    // Same, but seeds several outputs in a single reverse sweep.
    void backward_multi(const std::vector<std::pair<int, Vec>>& seeds);

    size_t num_nodes() const { return nodes_.size(); }

  private:
    struct Node {
        Vec val;
        Vec grad;
        std::function<void()> back;  // empty for leaves
        double aux = 0.0;            // op-specific (e.g. pre-normalization norm)
    };
    int push(Vec val);
    ParamStore* ps_;
    std::vector<Node> nodes_;
};

}  // namespace ttag
