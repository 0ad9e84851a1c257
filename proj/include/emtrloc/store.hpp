#pragma once

// Bit-exact persistence of precomputed short-circuit transients. Fixed
// little-endian layout, 64-bit float samples, no compression:
//
//   magic   8 bytes  "EMTRDB\0\n"
//   u32     format version (1)
//   u64     network fingerprint (FNV-1a of the canonical network text)
//   f64     dt   f64 t0   u64 n_samples   u64 n_positions
//   u32+N   excitation descriptor (UTF-8)
//   per position: u32+N segment id, f64 distance_m, u64 body offset
//   body    n_positions * n_samples f64 samples, position-key order
//
// Every field is written explicitly byte by byte, so identical databases
// serialize to identical bytes on any platform.

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "emtrloc/errors.hpp"
#include "emtrloc/netmodel.hpp"

namespace emtrloc {

inline constexpr char db_magic[8] = {'E', 'M', 'T', 'R', 'D', 'B', '\0', '\n'};
inline constexpr std::uint32_t db_version = 1;

struct TransientDB {
    std::uint64_t network_fingerprint = 0;
    std::string excitation;                  // human-readable provenance
    double dt = 0.0;
    double t0 = 0.0;
    std::vector<GridPosition> positions;     // ordered by (segment id, distance)
    std::vector<std::vector<double>> traces; // traces[i] responds at positions[i]

    std::size_t n_samples() const { return traces.empty() ? 0 : traces.front().size(); }

    friend bool operator==(const TransientDB&, const TransientDB&) = default;
};

inline void validate_db(const TransientDB& db) {
    if (db.positions.empty()) throw DbError(DbErrorKind::inconsistent, "database has no positions");
    if (db.traces.size() != db.positions.size())
        throw DbError(DbErrorKind::inconsistent, "trace count does not match position count");
    if (!(db.dt > 0.0)) throw DbError(DbErrorKind::inconsistent, "dt must be positive");
    const std::size_t n = db.traces.front().size();
    if (n < 2) throw DbError(DbErrorKind::inconsistent, "traces must have at least 2 samples");
    for (const auto& t : db.traces)
        if (t.size() != n) throw DbError(DbErrorKind::inconsistent, "traces have unequal lengths");
    for (std::size_t i = 1; i < db.positions.size(); ++i)
        if (!(db.positions[i - 1] < db.positions[i]))
            throw DbError(DbErrorKind::inconsistent, "positions not strictly ordered by key");
}

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double d) {
    put_u64(out, std::bit_cast<std::uint64_t>(d));
}

struct DbReader {
    std::string_view data;
    std::size_t pos = 0;

    void need(std::size_t n, const char* what) const {
        if (data.size() - pos < n)
            throw DbError(DbErrorKind::truncated,
                          std::string("truncated while reading ") + what + ": need " +
                              std::to_string(n) + " bytes at offset " + std::to_string(pos) +
                              ", have " + std::to_string(data.size() - pos));
    }
    std::uint32_t get_u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[pos + static_cast<std::size_t>(i)])) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t get_u64(const char* what) {
        need(8, what);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[pos + static_cast<std::size_t>(i)])) << (8 * i);
        pos += 8;
        return v;
    }
    double get_f64(const char* what) { return std::bit_cast<double>(get_u64(what)); }
    std::string get_str(std::uint32_t len, const char* what) {
        need(len, what);
        std::string s(data.substr(pos, len));
        pos += len;
        return s;
    }
};

} // namespace detail

inline std::string save_db_string(const TransientDB& db) {
    validate_db(db);
    std::string out;
    out.append(db_magic, sizeof db_magic);
    detail::put_u32(out, db_version);
    detail::put_u64(out, db.network_fingerprint);
    detail::put_f64(out, db.dt);
    detail::put_f64(out, db.t0);
    detail::put_u64(out, db.n_samples());
    detail::put_u64(out, db.positions.size());
    detail::put_u32(out, static_cast<std::uint32_t>(db.excitation.size()));
    out += db.excitation;
    const std::uint64_t trace_bytes = static_cast<std::uint64_t>(db.n_samples()) * 8;
    for (std::size_t i = 0; i < db.positions.size(); ++i) {
        detail::put_u32(out, static_cast<std::uint32_t>(db.positions[i].segment_id.size()));
        out += db.positions[i].segment_id;
        detail::put_f64(out, db.positions[i].distance_m);
        detail::put_u64(out, static_cast<std::uint64_t>(i) * trace_bytes);
    }
    for (const auto& trace : db.traces)
        for (double v : trace) detail::put_f64(out, v);
    return out;
}

inline void save_db(const TransientDB& db, std::ostream& out) {
    const std::string bytes = save_db_string(db);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DbError(DbErrorKind::io, "database write failed");
}

inline TransientDB load_db_string(std::string_view data) {
    detail::DbReader r{data};
    r.need(sizeof db_magic, "magic");
    if (data.substr(0, sizeof db_magic) != std::string_view(db_magic, sizeof db_magic))
        throw DbError(DbErrorKind::bad_magic, "not a transient database (bad magic)");
    r.pos = sizeof db_magic;

    const std::uint32_t version = r.get_u32("version");
    if (version != db_version)
        throw DbError(DbErrorKind::bad_version, "unsupported database version " +
                                                    std::to_string(version) + " (expected " +
                                                    std::to_string(db_version) + ")");
    TransientDB db;
    db.network_fingerprint = r.get_u64("fingerprint");
    db.dt = r.get_f64("dt");
    db.t0 = r.get_f64("t0");
    const std::uint64_t n_samples = r.get_u64("sample count");
    const std::uint64_t n_positions = r.get_u64("position count");
    if (!(db.dt > 0.0) || !std::isfinite(db.dt) || !std::isfinite(db.t0))
        throw DbError(DbErrorKind::inconsistent, "invalid dt/t0 header fields");
    if (n_samples < 2 || n_samples > (1ull << 40))
        throw DbError(DbErrorKind::inconsistent, "implausible sample count " + std::to_string(n_samples));
    if (n_positions < 1 || n_positions > (1ull << 24))
        throw DbError(DbErrorKind::inconsistent, "implausible position count " + std::to_string(n_positions));

    const std::uint32_t exc_len = r.get_u32("excitation length");
    db.excitation = r.get_str(exc_len, "excitation");

    const std::uint64_t trace_bytes = n_samples * 8;
    db.positions.reserve(n_positions);
    for (std::uint64_t i = 0; i < n_positions; ++i) {
        const std::uint32_t id_len = r.get_u32("segment id length");
        if (id_len == 0 || id_len > 4096)
            throw DbError(DbErrorKind::inconsistent, "implausible segment id length " + std::to_string(id_len));
        GridPosition p;
        p.segment_id = r.get_str(id_len, "segment id");
        p.distance_m = r.get_f64("distance");
        if (!std::isfinite(p.distance_m) || !(p.distance_m > 0.0))
            throw DbError(DbErrorKind::inconsistent, "invalid position distance");
        const std::uint64_t offset = r.get_u64("trace offset");
        if (offset != i * trace_bytes)
            throw DbError(DbErrorKind::inconsistent,
                          "directory offset " + std::to_string(offset) + " for entry " +
                              std::to_string(i) + " (expected " + std::to_string(i * trace_bytes) + ")");
        if (i > 0 && !(db.positions.back() < p))
            throw DbError(DbErrorKind::inconsistent, "positions not strictly ordered by key");
        db.positions.push_back(std::move(p));
    }

    const std::uint64_t body = n_positions * trace_bytes;
    const std::uint64_t have = data.size() - r.pos;
    if (have < body)
        throw DbError(DbErrorKind::truncated, "truncated body: expected " + std::to_string(body) +
                                                  " bytes, have " + std::to_string(have));
    if (have > body)
        throw DbError(DbErrorKind::inconsistent, std::to_string(have - body) +
                                                     " trailing bytes after body of " +
                                                     std::to_string(body));
    db.traces.resize(n_positions);
    for (auto& trace : db.traces) {
        trace.resize(n_samples);
        for (auto& v : trace) v = r.get_f64("sample");
    }
    return db;
}

inline TransientDB load_db(std::istream& in) {
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw DbError(DbErrorKind::io, "database read failed");
    return load_db_string(data);
}

// Write-temp-then-rename so readers never observe a partial file.
inline void save_db_file(const TransientDB& db, const std::string& path) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DbError(DbErrorKind::io, "cannot open '" + tmp + "' for writing");
        save_db(db, out);
        out.flush();
        if (!out) throw DbError(DbErrorKind::io, "write to '" + tmp + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw DbError(DbErrorKind::io, "rename to '" + path + "' failed: " + ec.message());
    }
}

inline TransientDB load_db_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DbError(DbErrorKind::io, "cannot open '" + path + "'");
    return load_db(in);
}

} // namespace emtrloc
