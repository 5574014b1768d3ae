#include "polarcod/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <iterator>

#include "polarcod/error.hpp"

namespace polarcod {

namespace {

constexpr char kMagic[4] = {'P', 'C', 'K', 'P'};

template <class T>
void put(std::string& out, T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Cursor {
   public:
    explicit Cursor(const std::string& data) : data_(data) {}

    template <class T>
    T get() {
        need(sizeof(T));
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += sizeof(T);
        return v;
    }
    std::string take(std::size_t n) {
        need(n);
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == data_.size(); }

   private:
    void need(std::size_t n) const {
        if (data_.size() - pos_ < n) throw DataError("checkpoint is truncated");
    }
    const std::string& data_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string encode_doubles(const std::vector<double>& values) {
    std::string out;
    out.reserve(values.size() * 8);
    for (double v : values) put(out, std::bit_cast<std::uint64_t>(v));
    return out;
}

std::vector<double> decode_doubles(const std::string& bytes) {
    if (bytes.size() % 8 != 0) throw DataError("checkpoint blob is not a whole number of doubles");
    Cursor c(bytes);
    std::vector<double> out(bytes.size() / 8);
    for (double& v : out) v = std::bit_cast<double>(c.get<std::uint64_t>());
    return out;
}

void write_checkpoint(const std::filesystem::path& path, const std::vector<Blob>& blobs) {
    std::string out(kMagic, 4);
    put(out, kCheckpointVersion);
    put(out, static_cast<std::uint32_t>(blobs.size()));
    for (const auto& b : blobs) {
        put(out, static_cast<std::uint32_t>(b.name.size()));
        out += b.name;
        put(out, static_cast<std::uint64_t>(b.bytes.size()));
        out += b.bytes;
    }
    // Write then rename so an interrupted save never leaves a half file behind.
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        f.write(out.data(), static_cast<std::streamsize>(out.size()));
        if (!f) throw DataError("cannot write checkpoint " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

std::vector<Blob> read_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open checkpoint " + path.string());
    const std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (data.size() < 4 || data.compare(0, 4, kMagic, 4) != 0) throw DataError(path.string() + " is not a checkpoint");
    Cursor c(data);
    c.take(4);
    const auto version = c.get<std::uint32_t>();
    if (version != kCheckpointVersion) {
        throw ConfigError("checkpoint " + path.string() + " has format version " + std::to_string(version) +
                          "; this build reads version " + std::to_string(kCheckpointVersion) +
                          " and cannot migrate it");
    }
    const auto count = c.get<std::uint32_t>();
    std::vector<Blob> blobs;
    for (std::uint32_t i = 0; i < count; ++i) {
        Blob b;
        b.name = c.take(c.get<std::uint32_t>());
        b.bytes = c.take(static_cast<std::size_t>(c.get<std::uint64_t>()));
        blobs.push_back(std::move(b));
    }
    if (!c.done()) throw DataError(path.string() + " has trailing bytes");
    return blobs;
}

const std::string& find_blob(const std::vector<Blob>& blobs, const std::string& name) {
    for (const auto& b : blobs)
        if (b.name == name) return b.bytes;
    throw DataError("checkpoint lacks '" + name + "'");
}

}  // namespace polarcod
