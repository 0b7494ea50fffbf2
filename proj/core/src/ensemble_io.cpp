#include "phonon_forge/ensemble_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>

#include "phonon_forge/error.hpp"

namespace phonon_forge {

namespace {

static_assert(std::endian::native == std::endian::little, "ensemble files are little-endian");

struct Column {
    std::string name;
    std::string dtype;
    std::vector<std::size_t> shape;
    const void* data;
    std::size_t bytes;
};

std::filesystem::path with_ext(std::filesystem::path stem, const char* ext) {
    stem += ext;
    return stem;
}

template <class T>
Column column(const char* name, const char* dtype, std::vector<std::size_t> shape, const std::vector<T>& v) {
    return {name, dtype, std::move(shape), v.data(), v.size() * sizeof(T)};
}

std::size_t dtype_size(const std::string& d) {
    if (d == "float32") return 4;
    if (d == "float64") return 8;
    if (d == "uint8") return 1;
    throw ConfigError("unsupported column dtype " + d);
}

}  // namespace

void write_ensemble(const std::filesystem::path& stem, const TraceEnsemble& e, JsonOut extra) {
    const std::size_t n = e.n_traces, len = e.length;
    std::vector<Column> cols;
    if (e.has_traces()) {
        cols.push_back(column("X", "float32", {n, len}, e.X));
        cols.push_back(column("P", "float32", {n, len}, e.P));
    }
    cols.push_back(column("X0", "float64", {n}, e.X0));
    cols.push_back(column("P0", "float64", {n}, e.P0));
    cols.push_back(column("herald_dark", "uint8", {n}, e.herald_dark));
    const bool moments = e.moments.count > 0;
    if (moments) {
        cols.push_back(column("mean_x", "float64", {len}, e.moments.mean_x));
        cols.push_back(column("mean_p", "float64", {len}, e.moments.mean_p));
        cols.push_back(column("m2_x", "float64", {len}, e.moments.m2_x));
        cols.push_back(column("m2_p", "float64", {len}, e.moments.m2_p));
    }

    const auto bin = with_ext(stem, ".bin");
    if (bin.has_parent_path()) std::filesystem::create_directories(bin.parent_path());
    std::ofstream f(bin, std::ios::binary | std::ios::trunc);
    if (!f) throw ConfigError("cannot open " + bin.string() + " for writing");
    JsonOut list = JsonOut::array();
    std::size_t offset = 0;
    for (const auto& c : cols) {
        f.write(static_cast<const char*>(c.data), static_cast<std::streamsize>(c.bytes));
        JsonOut shape = JsonOut::array();
        for (auto s : c.shape) shape.push(static_cast<std::int64_t>(s));
        JsonOut cj = JsonOut::object();
        cj.set("name", c.name).set("dtype", c.dtype).set("shape", std::move(shape));
        cj.set("offset", static_cast<std::int64_t>(offset)).set("bytes", static_cast<std::int64_t>(c.bytes));
        list.push(std::move(cj));
        offset += c.bytes;
    }
    if (!f) throw ConfigError("failed writing " + bin.string());

    JsonOut meta = JsonOut::object();
    meta.set("schema", "phonon_forge.ensemble")
        .set("version", kEnsembleSchemaVersion)
        .set("byte_order", "little")
        .set("data_file", bin.filename().string())
        .set("kind", to_string(e.kind))
        .set("sampling", to_string(e.sampling))
        .set("sample_period_s", e.sample_period)
        .set("length", static_cast<std::int64_t>(len))
        .set("herald_index", static_cast<std::int64_t>(e.herald_index))
        .set("n_traces", static_cast<std::int64_t>(n))
        .set("moments_count", static_cast<std::int64_t>(e.moments.count))
        .set("acceptance", e.acceptance)
        .set("gates_simulated", e.gates_simulated)
        .set("units", "heterodyne_vacuum")
        .set("columns", std::move(list))
        .set("extra", std::move(extra));
    write_text(with_ext(stem, ".json"), meta.dump());
}

TraceEnsemble read_ensemble(const std::filesystem::path& stem) {
    const auto js = with_ext(stem, ".json");
    std::ifstream jf(js);
    if (!jf) throw ConfigError("cannot open " + js.string());
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(jf);
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError(js.string() + ": " + ex.what());
    }
    try {
        if (meta.at("schema").get<std::string>() != "phonon_forge.ensemble")
            throw ConfigError(js.string() + " is not an ensemble sidecar");
        const int version = meta.at("version").get<int>();
        if (version != kEnsembleSchemaVersion)
            throw ConfigError("unsupported ensemble schema version " + std::to_string(version));

        TraceEnsemble e;
        e.kind = herald_kind_from_string(meta.at("kind").get<std::string>().c_str());
        e.sampling = herald_sampling_from_string(meta.at("sampling").get<std::string>().c_str());
        e.sample_period = meta.at("sample_period_s").get<double>();
        e.length = meta.at("length").get<std::size_t>();
        e.herald_index = meta.at("herald_index").get<std::size_t>();
        e.n_traces = meta.at("n_traces").get<std::size_t>();
        e.acceptance = meta.value("acceptance", 1.0);
        e.gates_simulated = meta.value("gates_simulated", std::uint64_t{0});
        e.moments.count = meta.value("moments_count", std::size_t{0});

        const auto bin = stem.parent_path() / meta.at("data_file").get<std::string>();
        std::ifstream bf(bin, std::ios::binary);
        if (!bf) throw ConfigError("cannot open " + bin.string());
        for (const auto& c : meta.at("columns")) {
            const std::string name = c.at("name");
            const std::string dtype = c.at("dtype");
            const std::size_t bytes = c.at("bytes");
            std::size_t count = 1;
            for (auto s : c.at("shape")) count *= s.get<std::size_t>();
            if (count * dtype_size(dtype) != bytes) throw ConfigError("column " + name + " has inconsistent size");
            bf.seekg(static_cast<std::streamoff>(c.at("offset").get<std::size_t>()));
            auto read_into = [&](auto& vec) {
                vec.resize(count);
                bf.read(reinterpret_cast<char*>(vec.data()), static_cast<std::streamsize>(bytes));
                if (!bf) throw ConfigError(bin.string() + " is truncated (column " + name + ")");
            };
            if (name == "X") read_into(e.X);
            else if (name == "P") read_into(e.P);
            else if (name == "X0") read_into(e.X0);
            else if (name == "P0") read_into(e.P0);
            else if (name == "herald_dark") read_into(e.herald_dark);
            else if (name == "mean_x") read_into(e.moments.mean_x);
            else if (name == "mean_p") read_into(e.moments.mean_p);
            else if (name == "m2_x") read_into(e.moments.m2_x);
            else if (name == "m2_p") read_into(e.moments.m2_p);
            else throw ConfigError("unknown ensemble column " + name);
        }
        return e;
    } catch (const nlohmann::json::exception& ex) {
        throw ConfigError(js.string() + ": " + ex.what());
    }
}

void write_heralds_csv(const std::filesystem::path& path, const std::vector<HeraldEvent>& heralds) {
    std::string out = "time_s,gate,kind,has_dark\n";
    for (const auto& h : heralds)
        out += format_double(h.time) + "," + std::to_string(h.gate) + "," + to_string(h.kind) + "," +
               (h.has_dark ? "1" : "0") + "\n";
    write_text(path, out);
}

}  // namespace phonon_forge
