// serialize.hpp
// Fixture and transcript byte formats.  Everything is little-endian and
// position-independent so records can be digested, diffed, and replayed.
//
// State layout ("QSV1"): magic, u32 qubit count, then 2^(n+1) doubles
// interleaved re/im.  Scheme and bill files reuse this amplitude block
// behind their own headers (see coin.hpp / bills.hpp).

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "qcash/errors.hpp"
#include "qcash/qstate.hpp"

namespace qcash {

class ByteWriter {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }

    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    void magic(const char tag[5]) {
        buf_.insert(buf_.end(), tag, tag + 4);
    }

    const std::vector<std::uint8_t>& bytes() const { return buf_; }

private:
    std::vector<std::uint8_t> buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::vector<std::uint8_t> bytes) : buf_(std::move(bytes)) {}

    std::uint8_t u8() { return take(1)[0]; }

    std::uint32_t u32() {
        const std::uint8_t* p = take(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t{p[i]} << (8 * i);
        return v;
    }

    std::uint64_t u64() {
        const std::uint8_t* p = take(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t{p[i]} << (8 * i);
        return v;
    }

    double f64() { return std::bit_cast<double>(u64()); }

    void expect_magic(const char tag[5]) {
        const std::uint8_t* p = take(4);
        if (std::memcmp(p, tag, 4) != 0) {
            throw IoError(std::string("bad magic, expected ") + tag);
        }
    }

    bool exhausted() const { return pos_ == buf_.size(); }

private:
    const std::uint8_t* take(std::size_t count) {
        if (pos_ + count > buf_.size()) throw IoError("truncated record");
        const std::uint8_t* p = buf_.data() + pos_;
        pos_ += count;
        return p;
    }

    std::vector<std::uint8_t> buf_;
    std::size_t pos_ = 0;
};

inline void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path);
}

inline std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

// Amplitude block only, no header: 2^(n+1) doubles, re/im interleaved.
inline void put_amplitudes(ByteWriter& w, const QuantumState& state) {
    for (const Complex& a : state.amplitudes()) {
        w.f64(a.real());
        w.f64(a.imag());
    }
}

inline QuantumState get_amplitudes(ByteReader& r, int n) {
    std::vector<Complex> amps(std::size_t{1} << n);
    for (Complex& a : amps) {
        double re = r.f64();
        double im = r.f64();
        a = Complex{re, im};
    }
    return QuantumState::from_amplitudes(n, std::move(amps));
}

inline std::vector<std::uint8_t> state_to_bytes(const QuantumState& state) {
    ByteWriter w;
    w.magic("QSV1");
    w.u32(static_cast<std::uint32_t>(state.qubits()));
    put_amplitudes(w, state);
    return w.bytes();
}

inline QuantumState state_from_bytes(std::vector<std::uint8_t> bytes) {
    ByteReader r(std::move(bytes));
    r.expect_magic("QSV1");
    std::uint32_t n = r.u32();
    if (n < 1 || n > static_cast<std::uint32_t>(kMaxQubits)) {
        throw IoError("state record has invalid qubit count");
    }
    QuantumState s = get_amplitudes(r, static_cast<int>(n));
    if (!r.exhausted()) throw IoError("trailing bytes after state record");
    return s;
}

inline void write_state(const std::string& path, const QuantumState& state) {
    write_file(path, state_to_bytes(state));
}

inline QuantumState read_state(const std::string& path) {
    return state_from_bytes(read_file(path));
}

// FNV-1a, 64-bit: the digest used in transcript records.
inline std::uint64_t fnv1a64(const std::vector<std::uint8_t>& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (std::uint8_t b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string digest_hex(const std::vector<std::uint8_t>& bytes) {
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(bytes);
    return out.str();
}

// Sorted plain-text list of integers, one per line.
inline void write_int_list(const std::string& path, std::vector<std::uint64_t> values) {
    std::sort(values.begin(), values.end());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    for (std::uint64_t v : values) out << v << '\n';
    if (!out) throw IoError("short write to " + path);
}

inline std::vector<std::uint64_t> read_int_list(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::uint64_t> values;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        values.push_back(std::stoull(line));
    }
    return values;
}

} // namespace qcash
