#include "trackjam/trace_csv.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace trackjam {

namespace {

constexpr std::array<const char*, 6> kStateSuffix{"x", "y", "z", "vx", "vy", "vz"};
constexpr std::array<const char*, 3> kAxisSuffix{"x", "y", "z"};

std::string agent_prefix(std::size_t j) { return "a" + std::to_string(j) + "_"; }

/// Number of columns for n agents.
std::size_t column_count(std::size_t n) { return 8 + n * 15 + 9 + n * (n - 1) + n + 1; }

class RowWriter {
public:
    explicit RowWriter(std::ostream& out) : out_(out) {}

    void text(std::string_view s) {
        sep();
        out_ << s;
    }
    void number(double x) { text(format_double(x)); }
    void integer(long long v) { text(std::to_string(v)); }
    void empty() { sep(); }
    void state(const TargetState& x) {
        for (int k = 0; k < 3; ++k) {
            number(x.position[k]);
        }
        for (int k = 0; k < 3; ++k) {
            number(x.velocity[k]);
        }
    }
    void optional_state(const std::optional<TargetState>& x) {
        if (x) {
            state(*x);
        } else {
            for (int k = 0; k < 6; ++k) {
                empty();
            }
        }
    }
    void end() {
        out_ << '\n';
        first_ = true;
    }

private:
    void sep() {
        if (!first_) {
            out_ << ',';
        }
        first_ = false;
    }
    std::ostream& out_;
    bool first_ = true;
};

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

class RowReader {
public:
    RowReader(std::vector<std::string_view> cells, std::size_t line)
        : cells_(std::move(cells)), line_(line) {}

    std::string_view next() {
        if (pos_ >= cells_.size()) {
            fail("too few columns");
        }
        return cells_[pos_++];
    }
    double number() {
        const std::string_view cell = next();
        auto v = parse_double(cell);
        if (!v) {
            fail("expected a number, got '" + std::string(cell) + "'");
        }
        return *v;
    }
    long long integer() {
        const std::string_view cell = next();
        long long v = 0;
        auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (ec != std::errc() || ptr != cell.data() + cell.size()) {
            fail("expected an integer, got '" + std::string(cell) + "'");
        }
        return v;
    }
    TargetState state() {
        TargetState x;
        for (int k = 0; k < 3; ++k) {
            x.position[k] = number();
        }
        for (int k = 0; k < 3; ++k) {
            x.velocity[k] = number();
        }
        return x;
    }
    std::optional<TargetState> optional_state() {
        std::size_t empties = 0;
        for (std::size_t k = 0; k < 6 && pos_ + k < cells_.size(); ++k) {
            empties += cells_[pos_ + k].empty() ? 1 : 0;
        }
        if (empties == 6) {
            pos_ += 6;
            return std::nullopt;
        }
        return state();
    }
    void finish() const {
        if (pos_ != cells_.size()) {
            fail("too many columns");
        }
    }
    [[noreturn]] void fail(const std::string& what) const {
        throw CsvError("trace csv line " + std::to_string(line_) + ": " + what);
    }

private:
    std::vector<std::string_view> cells_;
    std::size_t line_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string format_double(double x) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return std::string(buf.data(), ptr);
}

std::optional<double> parse_double(std::string_view text) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
        return std::nullopt;
    }
    return v;
}

std::vector<std::string> trace_csv_header(std::size_t n) {
    std::vector<std::string> h{"step", "truth_present"};
    for (const char* s : kStateSuffix) {
        h.push_back(std::string("truth_") + s);
    }
    for (std::size_t j = 0; j < n; ++j) {
        const std::string p = agent_prefix(j);
        for (const char* s : kAxisSuffix) {
            h.push_back(p + s);
        }
        h.push_back(p + "level_dBW");
        for (const char* s : kAxisSuffix) {
            h.push_back(p + "axis_" + s);
        }
        h.push_back(p + "existence");
        for (const char* s : kStateSuffix) {
            h.push_back(p + "est_" + s);
        }
        h.push_back(p + "interference_W");
    }
    h.emplace_back("fused_existence");
    for (const char* s : kStateSuffix) {
        h.push_back(std::string("fused_") + s);
    }
    h.emplace_back("target_received_W");
    h.emplace_back("ospa_m");
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) {
                h.push_back("rx_" + std::to_string(i) + "_from_" + std::to_string(j) + "_W");
            }
        }
    }
    for (std::size_t j = 0; j < n; ++j) {
        h.push_back(agent_prefix(j) + "n_meas");
    }
    h.emplace_back("planned");
    return h;
}

void write_trace_csv(const Trace& trace, std::ostream& out) {
    const std::size_t n = trace.n_agents();
    RowWriter row(out);
    for (const auto& name : trace_csv_header(n)) {
        row.text(name);
    }
    row.end();
    for (const StepRecord& rec : trace.steps) {
        row.integer(rec.step);
        row.integer(rec.truth_present ? 1 : 0);
        row.state(rec.truth);
        for (const AgentRecord& a : rec.agents) {
            for (int k = 0; k < 3; ++k) {
                row.number(a.position[k]);
            }
            if (a.level.is_off()) {
                row.text("OFF");
            } else {
                row.number(a.level.dbw_value());
            }
            for (int k = 0; k < 3; ++k) {
                row.number(a.axis[k]);
            }
            row.number(a.existence);
            row.optional_state(a.estimate);
            row.number(a.interference_w);
        }
        row.number(rec.fused_existence);
        row.optional_state(rec.fused);
        row.number(rec.target_received_w);
        row.number(rec.ospa_m);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i != j) {
                    row.number(rec.received_w(static_cast<Eigen::Index>(i),
                                              static_cast<Eigen::Index>(j)));
                }
            }
        }
        for (const AgentRecord& a : rec.agents) {
            row.integer(static_cast<long long>(a.n_measurements));
        }
        row.integer(rec.planned ? 1 : 0);
        row.end();
    }
}

void write_trace_csv(const Trace& trace, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw CsvError("cannot open for writing: " + path.string());
    }
    write_trace_csv(trace, out);
    out.flush();
    if (!out) {
        throw CsvError("write failed: " + path.string());
    }
}

Trace read_trace_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw CsvError("trace csv: missing header");
    }
    const auto header = split(line);
    std::size_t n = 0;
    while (column_count(n) < header.size()) {
        ++n;
    }
    const auto expected = trace_csv_header(n);
    if (header.size() != expected.size() ||
        !std::equal(header.begin(), header.end(), expected.begin())) {
        throw CsvError("trace csv: unrecognised header");
    }

    Trace trace;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        RowReader row(split(line), line_no);
        StepRecord rec;
        rec.step = static_cast<int>(row.integer());
        rec.truth_present = row.integer() != 0;
        rec.truth = row.state();
        rec.agents.resize(n);
        for (AgentRecord& a : rec.agents) {
            for (int k = 0; k < 3; ++k) {
                a.position[k] = row.number();
            }
            const std::string_view level = row.next();
            if (level == "OFF") {
                a.level = PowerLevel::off();
            } else if (auto v = parse_double(level)) {
                a.level = PowerLevel::dbw(*v);
            } else {
                row.fail("bad level '" + std::string(level) + "'");
            }
            for (int k = 0; k < 3; ++k) {
                a.axis[k] = row.number();
            }
            a.existence = row.number();
            a.estimate = row.optional_state();
            a.interference_w = row.number();
        }
        rec.fused_existence = row.number();
        rec.fused = row.optional_state();
        rec.target_received_w = row.number();
        rec.ospa_m = row.number();
        rec.received_w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                               static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (i != j) {
                    rec.received_w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                        row.number();
                }
            }
        }
        for (AgentRecord& a : rec.agents) {
            a.n_measurements = static_cast<std::size_t>(row.integer());
        }
        rec.planned = row.integer() != 0;
        row.finish();
        trace.steps.push_back(std::move(rec));
    }
    return trace;
}

Trace read_trace_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw CsvError("cannot open for reading: " + path.string());
    }
    return read_trace_csv(in);
}

}  // namespace trackjam
