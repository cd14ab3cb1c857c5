#include "stb/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace stb::enc {

Vocab::Vocab(const std::vector<std::string>& words) : words_(words) {
    for (std::size_t i = 0; i < words_.size(); ++i)
        index_[words_[i]] = static_cast<int>(i) + 3;
}

int Vocab::id(const std::string& word) const {
    auto it = index_.find(word);
    return it == index_.end() ? kUnk : it->second;
}

std::vector<int> Vocab::encode(const std::vector<std::string>& words) const {
    std::vector<int> out;
    out.reserve(words.size());
    for (const auto& w : words) out.push_back(id(w));
    return out;
}

Model::Model(const ModelConfig& cfg, const Vocab& vocab, std::uint64_t seed)
    : cfg_(cfg), vocab_(vocab) {
    cfg_.vocab_size = vocab_.size();
    params_.set_seed(seed);
    register_params();
}

namespace {
void register_attn(nn::ParamStore& ps, const std::string& prefix, int D) {
    ps.create(prefix + ".Wq", D, D);
    ps.create(prefix + ".Wk", D, D);
    ps.create(prefix + ".Wv", D, D);
    ps.create(prefix + ".Wo", D, D);
    ps.create_zero(prefix + ".bq", 1, D);
    ps.create_zero(prefix + ".bk", 1, D);
    ps.create_zero(prefix + ".bv", 1, D);
    ps.create_zero(prefix + ".bo", 1, D);
}
void register_ffn(nn::ParamStore& ps, const std::string& prefix, int D, int H) {
    ps.create(prefix + ".W1", D, H);
    ps.create_zero(prefix + ".b1", 1, H);
    ps.create(prefix + ".W2", H, D);
    ps.create_zero(prefix + ".b2", 1, D);
}
void register_ln(nn::ParamStore& ps, const std::string& prefix, int D) {
    ps.create_const(prefix + ".g", 1, D, 1.0);
    ps.create_zero(prefix + ".b", 1, D);
}
}  // namespace

void Model::register_params() {
    int D = cfg_.dim;
    params_.create("instr.tok", cfg_.vocab_size, D);
    params_.create("instr.pos", cfg_.max_len, D);
    params_.create("node.rel", topo::kRelBuckets, D);
    params_.create("node.time", topo::kMaxTimeBucket, D);
    for (int l = 0; l < cfg_.layers; ++l) {
        std::string p = "tcmt.l" + std::to_string(l);
        register_attn(params_, p + ".self", D);
        params_.create_zero(p + ".self.hop", cfg_.hop_buckets, cfg_.heads);
        register_attn(params_, p + ".cross", D);
        register_ffn(params_, p + ".ffn", D, cfg_.ffn_hidden);
        register_ln(params_, p + ".ln1", D);
        register_ln(params_, p + ".ln2", D);
        register_ln(params_, p + ".ln3", D);
        register_attn(params_, p + ".tself", D);
        register_attn(params_, p + ".tcross", D);
        register_ffn(params_, p + ".tffn", D, cfg_.ffn_hidden);
        register_ln(params_, p + ".tln1", D);
        register_ln(params_, p + ".tln2", D);
        register_ln(params_, p + ".tln3", D);

        std::string q = "gcmt.l" + std::to_string(l);
        register_attn(params_, q + ".self", D);
        register_attn(params_, q + ".cross", D);
        register_ffn(params_, q + ".ffn", D, cfg_.ffn_hidden);
        register_ln(params_, q + ".ln1", D);
        register_ln(params_, q + ".ln2", D);
        register_ln(params_, q + ".ln3", D);
    }
    params_.create("gcmt.pos", cfg_.grid.U * cfg_.grid.V, D);

    params_.create("mgaf.GF.W", 2 * D, D);
    params_.create_zero("mgaf.GF.b", 1, D);
    params_.create("mgaf.MF.W", 2 * D, D);
    params_.create_zero("mgaf.MF.b", 1, D);

    int mn = cfg_.grid.upsample_m * cfg_.grid.upsample_n;
    params_.create("vgwg.hffn.W1", D, cfg_.hffn_hidden);
    params_.create_zero("vgwg.hffn.b1", 1, cfg_.hffn_hidden);
    params_.create("vgwg.hffn.W2", cfg_.hffn_hidden, mn);
    params_.create_zero("vgwg.hffn.b2", 1, mn);

    params_.create("policy.graph.W", D, 1);
    params_.create_zero("policy.graph.b", 1, 1);
    params_.create("policy.grid.W", D, 1);
    params_.create_zero("policy.grid.b", 1, 1);
    params_.create("policy.gamma.W", 2 * D, 1);
    params_.create_zero("policy.gamma.b", 1, 1);

    params_.create("mlm.W", D, cfg_.vocab_size);
    params_.create_zero("mlm.b", 1, cfg_.vocab_size);
}

InstructionEmbedding Model::encode_instruction(nn::Tape& t,
                                               const std::vector<int>& token_ids) const {
    InstructionEmbedding out;
    out.ids = token_ids;
    if (out.ids.empty()) out.ids.push_back(Vocab::kPad);
    if (static_cast<int>(out.ids.size()) > cfg_.max_len)
        out.ids.resize(cfg_.max_len);
    for (int& id : out.ids)
        if (id < 0 || id >= cfg_.vocab_size) id = Vocab::kUnk;

    std::vector<int> pos(out.ids.size());
    for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = static_cast<int>(i);
    Ref tok = t.gather_rows(t.param(params_.at("instr.tok")), out.ids);
    Ref pe = t.gather_rows(t.param(params_.at("instr.pos")), pos);
    out.vectors = t.add(tok, pe);
    return out;
}

Ref Model::layer_norm(nn::Tape& t, Ref x, const std::string& prefix) const {
    return t.layer_norm_rows(x, t.param(params_.at(prefix + ".g")),
                             t.param(params_.at(prefix + ".b")));
}

Ref Model::attention(nn::Tape& t, Ref q_in, Ref kv_in, const std::string& prefix,
                     const Eigen::MatrixXi* bias_buckets) const {
    int D = cfg_.dim;
    int H = cfg_.heads;
    int dh = D / H;
    Ref Q = t.add_rowwise(t.matmul(q_in, t.param(params_.at(prefix + ".Wq"))),
                          t.param(params_.at(prefix + ".bq")));
    Ref K = t.add_rowwise(t.matmul(kv_in, t.param(params_.at(prefix + ".Wk"))),
                          t.param(params_.at(prefix + ".bk")));
    Ref V = t.add_rowwise(t.matmul(kv_in, t.param(params_.at(prefix + ".Wv"))),
                          t.param(params_.at(prefix + ".bv")));
    Ref heads = -1;
    for (int h = 0; h < H; ++h) {
        Ref Qh = t.slice_cols(Q, h * dh, dh);
        Ref Kh = t.slice_cols(K, h * dh, dh);
        Ref Vh = t.slice_cols(V, h * dh, dh);
        Ref scores = t.scale(t.matmul_nt(Qh, Kh), 1.0 / std::sqrt(double(dh)));
        if (bias_buckets) {
            Ref bias = t.bucket_bias(t.param(params_.at(prefix + ".hop")),
                                     *bias_buckets, h);
            scores = t.add(scores, bias);
        }
        Ref A = t.softmax_rows(scores);
        Ref Oh = t.matmul(A, Vh);
        heads = (h == 0) ? Oh : t.concat_cols(heads, Oh);
    }
    return t.add_rowwise(t.matmul(heads, t.param(params_.at(prefix + ".Wo"))),
                         t.param(params_.at(prefix + ".bo")));
}

Ref Model::ffn(nn::Tape& t, Ref x, const std::string& prefix) const {
    Ref h = t.relu(t.add_rowwise(t.matmul(x, t.param(params_.at(prefix + ".W1"))),
                                 t.param(params_.at(prefix + ".b1"))));
    return t.add_rowwise(t.matmul(h, t.param(params_.at(prefix + ".W2"))),
                         t.param(params_.at(prefix + ".b2")));
}

TcmtOutput Model::tcmt(nn::Tape& t, Ref node_inputs, const std::vector<int>& rel_ids,
                       const std::vector<int>& time_ids,
                       const Eigen::MatrixXi& hop_buckets, Ref instr) const {
    int N = static_cast<int>(t.value(node_inputs).rows());
    if (N == 0) throw std::invalid_argument("tcmt: empty graph");
    if (static_cast<int>(rel_ids.size()) != N ||
        static_cast<int>(time_ids.size()) != N || hop_buckets.rows() != N)
        throw std::invalid_argument("tcmt: context size mismatch");

    // NE: node feature + relative-position + time-step embeddings
    Ref rel = t.gather_rows(t.param(params_.at("node.rel")), rel_ids);
    Ref tim = t.gather_rows(t.param(params_.at("node.time")), time_ids);
    Ref X = t.add(node_inputs, t.add(rel, tim));
    Ref T = instr;

    for (int l = 0; l < cfg_.layers; ++l) {
        std::string p = "tcmt.l" + std::to_string(l);
        X = t.add(X, attention(t, layer_norm(t, X, p + ".ln1"), X, p + ".self",
                               &hop_buckets));
        X = t.add(X, attention(t, layer_norm(t, X, p + ".ln2"), T, p + ".cross",
                               nullptr));
        X = t.add(X, ffn(t, layer_norm(t, X, p + ".ln3"), p + ".ffn"));

        T = t.add(T, attention(t, layer_norm(t, T, p + ".tln1"), T, p + ".tself",
                               nullptr));
        T = t.add(T, attention(t, layer_norm(t, T, p + ".tln2"), X, p + ".tcross",
                               nullptr));
        T = t.add(T, ffn(t, layer_norm(t, T, p + ".tln3"), p + ".tffn"));
    }
    return {X, T};
}

Ref Model::gcmt(nn::Tape& t, Ref grid_feats, Ref instr) const {
    int UV = cfg_.grid.U * cfg_.grid.V;
    if (t.value(grid_feats).rows() != UV)
        throw std::invalid_argument("gcmt: grid/param shape mismatch");
    Ref X = t.add(grid_feats, t.param(params_.at("gcmt.pos")));
    for (int l = 0; l < cfg_.layers; ++l) {
        std::string p = "gcmt.l" + std::to_string(l);
        X = t.add(X, attention(t, layer_norm(t, X, p + ".ln1"), X, p + ".self",
                               nullptr));
        X = t.add(X, attention(t, layer_norm(t, X, p + ".ln2"), instr, p + ".cross",
                               nullptr));
        X = t.add(X, ffn(t, layer_norm(t, X, p + ".ln3"), p + ".ffn"));
    }
    return X;
}

void Model::save(const std::string& prefix) const {
    params_.save(prefix + ".bin", prefix + ".json");
}

void Model::load(const std::string& prefix) {
    params_.load(prefix + ".bin", prefix + ".json");
}

}  // namespace stb::enc
