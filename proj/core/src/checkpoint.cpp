#include "okgllm/checkpoint.hpp"

#include <fstream>

#include "okgllm/errors.hpp"

namespace okgllm {

namespace {

constexpr std::uint64_t kCkptMagic = 0x4f4b474c4c4d4350ull;  // "OKGLLMCP"

void write_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
std::uint64_t read_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
void write_string(std::ostream& out, const std::string& s) {
    write_u64(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
std::string read_string(std::istream& in) {
    std::string s(read_u64(in), '\0');
    in.read(s.data(), static_cast<std::streamsize>(s.size()));
    return s;
}
void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
    write_u64(out, static_cast<std::uint64_t>(m.rows()));
    write_u64(out, static_cast<std::uint64_t>(m.cols()));
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double) * m.size()));
}
Eigen::MatrixXd read_matrix(std::istream& in) {
    auto r = static_cast<Eigen::Index>(read_u64(in));
    auto c = static_cast<Eigen::Index>(read_u64(in));
    Eigen::MatrixXd m(r, c);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
    return m;
}

}  // namespace

void Checkpoint::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint '" + path + "'");
    write_u64(out, kCkptMagic);
    write_string(out, config.to_json());
    write_string(out, backbone_identity);
    write_u64(out, backbone_checksum);
    write_string(out, rng_state);
    write_u64(out, static_cast<std::uint64_t>(epoch));
    out.write(reinterpret_cast<const char*>(&best_val_loss), sizeof(best_val_loss));

    write_u64(out, params.size());
    for (const auto& [name, m] : params) {
        write_string(out, name);
        write_matrix(out, m);
    }

    write_u64(out, table.d > 0 ? 1 : 0);
    if (table.d > 0) {
        // Reuse the table's own binary format via a temp region of the stream.
        write_u64(out, static_cast<std::uint64_t>(table.d));
        write_u64(out, static_cast<std::uint64_t>(table.p));
        out.write(reinterpret_cast<const char*>(&table.gamma), sizeof(table.gamma));
        write_u64(out, table.seed);
        write_u64(out, static_cast<std::uint64_t>(table.epochs_trained));
        write_u64(out, table.frozen ? 1 : 0);
        write_u64(out, table.entity_vectors.size());
        for (const auto& [id, v] : table.entity_vectors) {
            write_string(out, id);
            write_matrix(out, v);
        }
        write_u64(out, table.relation_vectors.size());
        for (const auto& [id, v] : table.relation_vectors) {
            write_string(out, id);
            write_matrix(out, v);
        }
    }
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read checkpoint '" + path + "'");
    if (read_u64(in) != kCkptMagic)
        throw DataError("'" + path + "' is not a checkpoint file");

    Checkpoint ckpt;
    {
        std::string cfg_json = read_string(in);
        std::string tmp = path + ".cfg.tmp";
        std::ofstream cf(tmp);
        cf << cfg_json;
        cf.close();
        ckpt.config = ExperimentConfig::from_json_file(tmp);
        std::remove(tmp.c_str());
    }
    ckpt.backbone_identity = read_string(in);
    ckpt.backbone_checksum = read_u64(in);
    ckpt.rng_state = read_string(in);
    ckpt.epoch = static_cast<int>(read_u64(in));
    in.read(reinterpret_cast<char*>(&ckpt.best_val_loss), sizeof(ckpt.best_val_loss));

    std::uint64_t np = read_u64(in);
    for (std::uint64_t i = 0; i < np; ++i) {
        std::string name = read_string(in);
        ckpt.params[name] = read_matrix(in);
    }

    if (read_u64(in) == 1) {
        ckpt.table.d = static_cast<int>(read_u64(in));
        ckpt.table.p = static_cast<int>(read_u64(in));
        in.read(reinterpret_cast<char*>(&ckpt.table.gamma), sizeof(ckpt.table.gamma));
        ckpt.table.seed = read_u64(in);
        ckpt.table.epochs_trained = static_cast<int>(read_u64(in));
        ckpt.table.frozen = read_u64(in) != 0;
        std::uint64_t ne = read_u64(in);
        for (std::uint64_t i = 0; i < ne; ++i) {
            std::string id = read_string(in);
            ckpt.table.entity_vectors[id] = read_matrix(in);
        }
        std::uint64_t nr = read_u64(in);
        for (std::uint64_t i = 0; i < nr; ++i) {
            std::string id = read_string(in);
            ckpt.table.relation_vectors[id] = read_matrix(in);
        }
    }
    if (!in) throw DataError("truncated checkpoint '" + path + "'");
    return ckpt;
}

Checkpoint Checkpoint::from_model(const OkgLlmModel& model,
                                  const EmbeddingTable* table,
                                  const std::string& rng_state, int epoch,
                                  double best_val_loss) {
    Checkpoint ckpt;
    ckpt.config = model.config();
    for (const auto& [name, v] : model.named_params()) ckpt.params[name] = v->value;
    if (table) ckpt.table = *table;
    ckpt.backbone_identity = model.backbone().identity();
    ckpt.backbone_checksum = model.backbone().checksum();
    ckpt.rng_state = rng_state;
    ckpt.epoch = epoch;
    ckpt.best_val_loss = best_val_loss;
    return ckpt;
}

void Checkpoint::apply_to(OkgLlmModel& model) const {
    for (auto& [name, v] : model.named_params()) {
        auto it = params.find(name);
        if (it == params.end())
            throw DataError("checkpoint is missing parameter '" + name + "'");
        if (it->second.rows() != v->value.rows() || it->second.cols() != v->value.cols())
            throw ShapeError("checkpoint parameter '" + name + "' has wrong shape");
        v->value = it->second;
    }
}

}  // namespace okgllm
