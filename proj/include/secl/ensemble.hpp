#pragma once

#include <zlib.h>

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "secl/dataset.hpp"
#include "secl/rbfn.hpp"
#include "secl/rng.hpp"
#include "secl/tree.hpp"

namespace secl {

/// The full pipeline artifact: the tree that ranked features and produces
/// the extra input column, the selected feature list, the encoder fit on
/// those features, and the network that makes the final call.
struct SuperensembleModel {
    TreeModel tree;
    std::vector<std::size_t> selected_features;
    std::vector<std::string> selected_names;
    EncoderState encoder;
    RbfNetwork net;
    std::uint64_t schema_fingerprint = 0;
};

struct PipelineConfig {
    SplitCriterion criterion = SplitCriterion::hellinger;
    double minsplit_frac = 0.1;
    std::optional<std::size_t> top_m;
    RbfTrainConfig rbfn;
    std::uint64_t seed = 0;
};

/// Optional instrumentation captured during fit, for tests and debugging.
struct FitTrace {
    std::vector<double> train_extra_column;
    Matrix train_inputs;
};

inline std::vector<double> tree_output_column(const TreeModel& tree, const Dataset& ds,
                                              const std::vector<std::size_t>& rows) {
    const auto preds = predict_tree(tree, ds, rows);
    std::vector<double> col(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) col[i] = label_to01(preds[i]);
    return col;
}

/// Fits the pipeline: grow the tree on the training rows, keep its highest
/// ranked features (all of them if the tree never split), then train the
/// network on the encoded selection plus the tree's 0/1 prediction as one
/// extra raw column. Validation rows are used only for selecting the hidden
/// unit count.
inline SuperensembleModel fit_superensemble(const Dataset& ds,
                                            const std::vector<std::size_t>& train,
                                            const std::vector<std::size_t>& validation,
                                            const PipelineConfig& config,
                                            FitTrace* trace = nullptr) {
    if (config.minsplit_frac <= 0.0 || config.minsplit_frac > 1.0)
        throw std::invalid_argument("fit_superensemble: minsplit_frac must be in (0, 1]");

    SuperensembleModel model;
    model.schema_fingerprint = ds.schema.fingerprint();

    const auto minsplit = std::max<std::size_t>(
        2, static_cast<std::size_t>(
               std::ceil(config.minsplit_frac * static_cast<double>(train.size()))));
    model.tree = fit_tree(ds, train, config.criterion, minsplit);

    model.selected_features = rank_features(model.tree, config.top_m);
    if (model.selected_features.empty()) {
        // leaf-only tree: fall back to the full feature set
        model.selected_features.resize(ds.d());
        for (std::size_t f = 0; f < ds.d(); ++f) model.selected_features[f] = f;
    }
    for (std::size_t f : model.selected_features)
        model.selected_names.push_back(ds.schema.features[f].name);

    model.encoder = fit_encoder(ds, train, model.selected_features);

    const auto extra_train = tree_output_column(model.tree, ds, train);
    const Matrix x_train = encode(ds, train, model.encoder, &extra_train);
    std::vector<double> y_train(train.size());
    for (std::size_t i = 0; i < train.size(); ++i) y_train[i] = label_to01(ds.labels[train[i]]);

    RbfTrainConfig rbf_cfg = config.rbfn;
    rbf_cfg.seed = mix_seed(config.seed, 0x52424653ULL);

    if (!validation.empty()) {
        const auto extra_val = tree_output_column(model.tree, ds, validation);
        const Matrix x_val = encode(ds, validation, model.encoder, &extra_val);
        std::vector<double> y_val(validation.size());
        for (std::size_t i = 0; i < validation.size(); ++i)
            y_val[i] = label_to01(ds.labels[validation[i]]);
        model.net = train_rbfn(x_train, y_train, rbf_cfg, {{&x_val, &y_val}});
    } else {
        model.net = train_rbfn(x_train, y_train, rbf_cfg);
    }

    if (model.net.dim != model.encoder.width + 1)
        throw std::logic_error("fit_superensemble: network input dimension invariant broken");

    if (trace) {
        trace->train_extra_column = extra_train;
        trace->train_inputs = x_train;
    }
    return model;
}

inline std::vector<ClassLabel> predict_superensemble(const SuperensembleModel& model,
                                                     const Dataset& ds,
                                                     const std::vector<std::size_t>& rows) {
    if (model.schema_fingerprint != ds.schema.fingerprint())
        throw DataError("model was trained against a different schema (fingerprint mismatch)");
    if (rows.empty()) return {};
    const auto extra = tree_output_column(model.tree, ds, rows);
    const Matrix x = encode(ds, rows, model.encoder, &extra);
    return predict_rbfn(model.net, x);
}

// ---------------------------------------------------------------------------
// SECL1 model file
// ---------------------------------------------------------------------------
//
// Line-oriented text, sections in fixed order, every float printed with 17
// significant digits so reloaded models predict bit-identically. The final
// line carries a CRC32 over all preceding bytes.

namespace detail {

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double parse_double_token(std::istringstream& ss, const char* what) {
    std::string tok;
    if (!(ss >> tok)) throw DataError(std::string("truncated model file: missing ") + what);
    const char* begin = tok.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end != begin + tok.size())
        throw DataError(std::string("model file: bad number for ") + what + ": '" + tok + "'");
    return v;
}

inline void write_tree(std::ostringstream& out, const TreeModel& tree) {
    out << "[TREE]\n";
    out << "criterion " << criterion_name(tree.criterion) << "\n";
    out << "minsplit " << tree.minsplit << "\n";
    out << "feature_count " << tree.feature_count << "\n";
    out << "nodes " << tree.nodes.size() << "\n";
    // pre-order; child indices are implied by the recursive structure
    for (const auto& node : tree.nodes) {
        if (node.leaf) {
            out << "L " << (node.label == ClassLabel::positive ? 1 : 0) << " "
                << node.counts.pos << " " << node.counts.neg << "\n";
        } else {
            out << "I " << node.rule.feature << " "
                << (node.rule.type == FeatureType::numeric ? "n" : "c") << " "
                << (node.rule.type == FeatureType::numeric ? fmt_double(node.rule.threshold)
                                                           : std::to_string(node.rule.value_index))
                << " " << node.counts.pos << " " << node.counts.neg << "\n";
        }
    }
    out << "importances";
    for (double v : tree.importances) out << " " << fmt_double(v);
    out << "\n";
}

struct LineReader {
    std::istringstream in;
    std::size_t lineno = 0;

    explicit LineReader(std::string text) : in(std::move(text)) {}

    std::string next() {
        std::string line;
        if (!std::getline(in, line)) throw DataError("truncated model file");
        ++lineno;
        return line;
    }

    void expect(const std::string& literal) {
        const std::string line = next();
        if (line != literal)
            throw DataError("model file: expected '" + literal + "', got '" + line + "'");
    }
};

inline int rebuild_children(std::vector<TreeNode>& nodes, std::size_t& cursor) {
    if (cursor >= nodes.size()) throw DataError("model file: tree node list too short");
    const auto index = static_cast<int>(cursor++);
    if (!nodes[index].leaf) {
        nodes[index].left = rebuild_children(nodes, cursor);
        nodes[index].right = rebuild_children(nodes, cursor);
    }
    return index;
}

inline TreeModel read_tree(LineReader& reader) {
    TreeModel tree;
    reader.expect("[TREE]");

    std::istringstream ss(reader.next());
    std::string key, value;
    ss >> key >> value;
    if (key != "criterion") throw DataError("model file: missing criterion");
    const auto crit = parse_criterion(value);
    if (!crit) throw DataError("model file: unknown criterion '" + value + "'");
    tree.criterion = *crit;

    ss = std::istringstream(reader.next());
    ss >> key >> tree.minsplit;
    if (key != "minsplit") throw DataError("model file: missing minsplit");

    ss = std::istringstream(reader.next());
    ss >> key >> tree.feature_count;
    if (key != "feature_count") throw DataError("model file: missing feature_count");

    std::size_t node_count = 0;
    ss = std::istringstream(reader.next());
    ss >> key >> node_count;
    if (key != "nodes" || node_count == 0) throw DataError("model file: missing node count");

    tree.nodes.resize(node_count);
    for (auto& node : tree.nodes) {
        std::istringstream ls(reader.next());
        std::string tag;
        if (!(ls >> tag)) throw DataError("model file: empty node line");
        if (tag == "L") {
            int label = 0;
            node.leaf = true;
            if (!(ls >> label >> node.counts.pos >> node.counts.neg))
                throw DataError("model file: bad leaf line");
            node.label = label ? ClassLabel::positive : ClassLabel::negative;
        } else if (tag == "I") {
            node.leaf = false;
            std::string kind;
            if (!(ls >> node.rule.feature >> kind))
                throw DataError("model file: bad internal node line");
            if (kind == "n") {
                node.rule.type = FeatureType::numeric;
                node.rule.threshold = parse_double_token(ls, "threshold");
            } else if (kind == "c") {
                node.rule.type = FeatureType::categorical;
                if (!(ls >> node.rule.value_index))
                    throw DataError("model file: bad categorical rule");
            } else {
                throw DataError("model file: unknown rule kind '" + kind + "'");
            }
            if (!(ls >> node.counts.pos >> node.counts.neg))
                throw DataError("model file: bad internal node counts");
        } else {
            throw DataError("model file: unknown node tag '" + tag + "'");
        }
    }
    std::size_t cursor = 0;
    rebuild_children(tree.nodes, cursor);
    if (cursor != tree.nodes.size())
        throw DataError("model file: tree node list inconsistent with structure");

    std::istringstream is(reader.next());
    std::string tag;
    is >> tag;
    if (tag != "importances") throw DataError("model file: missing importances");
    tree.importances.resize(tree.feature_count);
    for (auto& v : tree.importances) v = parse_double_token(is, "importance");
    return tree;
}

}  // namespace detail

inline std::string serialize_model(const SuperensembleModel& model) {
    std::ostringstream out;
    char fp[32];
    std::snprintf(fp, sizeof(fp), "%016" PRIx64, model.schema_fingerprint);
    out << "SECL1 " << fp << "\n";

    detail::write_tree(out, model.tree);

    out << "[FEATURES]\n";
    out << "count " << model.selected_features.size() << "\n";
    for (std::size_t i = 0; i < model.selected_features.size(); ++i)
        out << model.selected_features[i] << " " << model.selected_names[i] << "\n";

    out << "[ENCODER]\n";
    out << "count " << model.encoder.features.size() << "\n";
    for (const auto& pf : model.encoder.features) {
        if (pf.type == FeatureType::numeric)
            out << "n " << pf.feature << " " << detail::fmt_double(pf.mean) << " "
                << detail::fmt_double(pf.sd) << "\n";
        else
            out << "c " << pf.feature << " " << pf.value_count << "\n";
    }

    out << "[RBFN]\n";
    out << "k " << model.net.k << " dim " << model.net.dim << "\n";
    out << "bias " << detail::fmt_double(model.net.bias) << "\n";
    for (std::size_t j = 0; j < model.net.k; ++j) {
        out << "unit " << detail::fmt_double(model.net.widths[j]) << " "
            << detail::fmt_double(model.net.weights[j]);
        for (double c : model.net.centers.row(j)) out << " " << detail::fmt_double(c);
        out << "\n";
    }

    std::string body = out.str();
    const auto crc =
        ::crc32(0L, reinterpret_cast<const Bytef*>(body.data()),
                static_cast<uInt>(body.size()));
    char crcbuf[16];
    std::snprintf(crcbuf, sizeof(crcbuf), "%08lx", static_cast<unsigned long>(crc));
    body += "CRC32 ";
    body += crcbuf;
    body += "\n";
    return body;
}

inline SuperensembleModel deserialize_model(const std::string& text) {
    const auto crc_pos = text.rfind("CRC32 ");
    if (crc_pos == std::string::npos || crc_pos == 0 || text[crc_pos - 1] != '\n')
        throw DataError("truncated model file: missing checksum line");
    {
        const std::string crc_line = detail::trim(text.substr(crc_pos));
        std::istringstream ss(crc_line);
        std::string tag, hex;
        ss >> tag >> hex;
        char* end = nullptr;
        const unsigned long stored = std::strtoul(hex.c_str(), &end, 16);
        if (hex.empty() || *end != '\0') throw DataError("model file: bad checksum line");
        const auto computed =
            ::crc32(0L, reinterpret_cast<const Bytef*>(text.data()),
                    static_cast<uInt>(crc_pos));
        if (stored != computed) throw DataError("model file checksum mismatch");
    }

    detail::LineReader reader(text.substr(0, crc_pos));
    {
        std::istringstream ss(reader.next());
        std::string magic, fp;
        ss >> magic >> fp;
        if (magic != "SECL1")
            throw DataError("unsupported model format version '" + magic + "' (expected SECL1)");
        if (fp.size() != 16) throw DataError("model file: bad schema fingerprint");
    }

    SuperensembleModel model;
    {
        std::istringstream header(text);
        std::string magic, fp;
        header >> magic >> fp;
        model.schema_fingerprint = std::strtoull(fp.c_str(), nullptr, 16);
    }
    model.tree = detail::read_tree(reader);

    reader.expect("[FEATURES]");
    std::istringstream ss(reader.next());
    std::string key;
    std::size_t count = 0;
    ss >> key >> count;
    if (key != "count") throw DataError("model file: missing feature count");
    for (std::size_t i = 0; i < count; ++i) {
        std::istringstream ls(reader.next());
        std::size_t idx = 0;
        std::string name;
        if (!(ls >> idx >> name)) throw DataError("model file: bad selected feature line");
        model.selected_features.push_back(idx);
        model.selected_names.push_back(name);
    }

    reader.expect("[ENCODER]");
    ss = std::istringstream(reader.next());
    ss >> key >> count;
    if (key != "count") throw DataError("model file: missing encoder count");
    std::size_t numeric_cols = 0, onehot_cols = 0;
    for (std::size_t i = 0; i < count; ++i) {
        std::istringstream ls(reader.next());
        std::string kind;
        EncoderState::PerFeature pf;
        if (!(ls >> kind >> pf.feature)) throw DataError("model file: bad encoder line");
        if (kind == "n") {
            pf.type = FeatureType::numeric;
            pf.mean = detail::parse_double_token(ls, "encoder mean");
            pf.sd = detail::parse_double_token(ls, "encoder sd");
            ++numeric_cols;
        } else if (kind == "c") {
            pf.type = FeatureType::categorical;
            if (!(ls >> pf.value_count)) throw DataError("model file: bad encoder value count");
            onehot_cols += pf.value_count;
        } else {
            throw DataError("model file: unknown encoder kind '" + kind + "'");
        }
        model.encoder.features.push_back(pf);
    }
    model.encoder.width = numeric_cols + onehot_cols;

    reader.expect("[RBFN]");
    ss = std::istringstream(reader.next());
    std::string key2;
    ss >> key >> model.net.k >> key2 >> model.net.dim;
    if (key != "k" || key2 != "dim" || model.net.k == 0 || model.net.dim == 0)
        throw DataError("model file: bad network header");
    ss = std::istringstream(reader.next());
    ss >> key;
    if (key != "bias") throw DataError("model file: missing bias");
    model.net.bias = detail::parse_double_token(ss, "bias");
    model.net.centers = Matrix(model.net.k, model.net.dim);
    for (std::size_t j = 0; j < model.net.k; ++j) {
        std::istringstream ls(reader.next());
        std::string tag;
        ls >> tag;
        if (tag != "unit") throw DataError("model file: missing unit line");
        model.net.widths.push_back(detail::parse_double_token(ls, "sigma"));
        model.net.weights.push_back(detail::parse_double_token(ls, "weight"));
        auto c = model.net.centers.row(j);
        for (std::size_t t = 0; t < model.net.dim; ++t)
            c[t] = detail::parse_double_token(ls, "center coordinate");
    }

    if (model.net.dim != model.encoder.width + 1)
        throw DataError("model file: network dimension inconsistent with encoder");
    return model;
}

inline void save_model(const SuperensembleModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open model file for writing: " + path.string());
    const std::string text = serialize_model(model);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw DataError("failed writing model file: " + path.string());
}

inline SuperensembleModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize_model(buf.str());
}

}  // namespace secl
