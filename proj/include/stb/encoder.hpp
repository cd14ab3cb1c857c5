#pragma once

#include <map>
#include <string>
#include <vector>

#include "stb/geometry.hpp"
#include "stb/nn/tape.hpp"
#include "stb/topo_graph.hpp"

namespace stb::enc {

using nn::Mat;
using Ref = nn::Tape::Ref;

/// Token table. Id 0 is PAD, 1 is UNK, 2 is MASK; words start at 3.
class Vocab {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kMask = 2;

    Vocab() = default;
    explicit Vocab(const std::vector<std::string>& words);

    int id(const std::string& word) const;  // kUnk for unknown words
    std::vector<int> encode(const std::vector<std::string>& words) const;
    int size() const { return static_cast<int>(words_.size()) + 3; }
    const std::vector<std::string>& words() const { return words_; }

private:
    std::vector<std::string> words_;
    std::map<std::string, int> index_;
};

struct ModelConfig {
    int dim = 32;        // feature dimension D
    int heads = 2;
    int layers = 2;
    int ffn_hidden = 64;
    int max_len = 24;    // instruction length cap
    int hop_buckets = 5; // graph-hop bias buckets {0,1,2,3,>=4}
    int hffn_hidden = 64;
    geom::GridSpec grid;
    int vocab_size = 0;  // filled from the vocab at model construction
};

struct InstructionEmbedding {
    std::vector<int> ids;
    Ref vectors = -1;  // L x D on the tape
};

struct TcmtOutput {
    Ref nodes = -1;  // N x D aligned node features
    Ref text = -1;   // L x D post-TCMT instruction-side features (MLM head input)
};

/// Owns every learnable parameter of the pipeline (encoder, MGAF heads, HFFN,
/// action heads, MLM head) so one checkpoint covers the whole model.
class Model {
public:
    Model(const ModelConfig& cfg, const Vocab& vocab, std::uint64_t seed);

    const ModelConfig& config() const { return cfg_; }
    const Vocab& vocab() const { return vocab_; }
    // Params are logically part of the model but mutated by training and by
    // tape leaves even during const forward passes.
    nn::ParamStore& params() const { return params_; }

    // Learned token lookup + learned positional embedding; truncates to
    // max_len, maps unknown words to UNK.
    InstructionEmbedding encode_instruction(nn::Tape& t,
                                            const std::vector<int>& token_ids) const;

    // Eq-style graph transformer: NE(node inputs) -> [graph-aware self-attn
    // with hop-bucket bias, cross-attn to the instruction, FFN] x layers.
    // Also maintains a text stream whose output feeds the MLM head.
    TcmtOutput tcmt(nn::Tape& t, Ref node_inputs,
                    const std::vector<int>& rel_ids, const std::vector<int>& time_ids,
                    const Eigen::MatrixXi& hop_buckets, Ref instr) const;

    // Grid transformer: CE(cells) = cell feature + learned 2D positional
    // embedding, then self-attn / cross-attn / FFN per layer. In and out are
    // (U*V) x D.
    Ref gcmt(nn::Tape& t, Ref grid_feats, Ref instr) const;

    void save(const std::string& prefix) const;  // prefix.bin + prefix.json
    void load(const std::string& prefix);

private:
    Ref attention(nn::Tape& t, Ref q_in, Ref kv_in, const std::string& prefix,
                  const Eigen::MatrixXi* bias_buckets) const;
    Ref ffn(nn::Tape& t, Ref x, const std::string& prefix) const;
    Ref layer_norm(nn::Tape& t, Ref x, const std::string& prefix) const;
    void register_params();

    ModelConfig cfg_;
    Vocab vocab_;
    mutable nn::ParamStore params_;
};

}  // namespace stb::enc
