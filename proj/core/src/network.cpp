#include "gfsim/network.hpp"

#include <fstream>
#include <sstream>

namespace gfsim {

void NetworkModel::check_bus(int id, const char* what) const {
    if (id < 0 || id >= bus_count()) {
        throw std::invalid_argument(std::string("NetworkModel: ") + what + " references bus " +
                                    std::to_string(id) + " which does not exist");
    }
}

int NetworkModel::add_bus(double v_base, double c, double g) {
    if (!(v_base > 0.0)) throw std::invalid_argument("NetworkModel: bus v_base must be > 0");
    BusParams b;
    b.id = bus_count();
    b.v_base = v_base;
    b.c = c;
    b.g = g;
    buses_.push_back(b);
    return b.id;
}

void NetworkModel::add_line(const LineParams& line) {
    check_bus(line.from_bus, "line");
    check_bus(line.to_bus, "line");
    if (!(line.l > 0.0) || line.r < 0.0 || line.c_half < 0.0) {
        throw std::invalid_argument("NetworkModel: invalid line parameters");
    }
    branches_.push_back({line.from_bus, line.to_bus, line.r, line.l, 1.0, false});
    buses_[line.from_bus].c += line.c_half;
    buses_[line.to_bus].c += line.c_half;
}

void NetworkModel::add_transformer(const TransformerParams& tr) {
    check_bus(tr.from_bus, "transformer");
    check_bus(tr.to_bus, "transformer");
    if (!(tr.l > 0.0) || !(tr.ratio > 0.0)) {
        throw std::invalid_argument("NetworkModel: invalid transformer parameters");
    }
    branches_.push_back({tr.from_bus, tr.to_bus, tr.r, tr.l, tr.ratio, true});
}

void NetworkModel::add_load(const LoadParams& load) {
    check_bus(load.bus, "load");
    if (load.g < 0.0) throw std::invalid_argument("NetworkModel: load conductance must be >= 0");
    buses_[load.bus].g += load.g;
}

void NetworkModel::add_bus_capacitance(int bus, double c) {
    check_bus(bus, "capacitance");
    buses_[bus].c += c;
}

void NetworkModel::add_bus_conductance(int bus, double g) {
    check_bus(bus, "conductance");
    buses_[bus].g += g;
}

const BusParams& NetworkModel::bus(int id) const {
    check_bus(id, "query");
    return buses_[id];
}

std::optional<int> NetworkModel::transformer_at(int bus) const {
    for (int b = 0; b < branch_count(); ++b) {
        if (branches_[b].is_transformer &&
            (branches_[b].from == bus || branches_[b].to == bus)) {
            return b;
        }
    }
    return std::nullopt;
}

void NetworkModel::validate() const {
    for (const auto& b : buses_) {
        if (!(b.c > 0.0)) {
            throw std::invalid_argument("NetworkModel: bus " + std::to_string(b.id) +
                                        " has no capacitance; every bus voltage needs a state");
        }
    }
}

void NetworkModel::rhs(const double* x, const double* injections, double* dx) const {
    const int nb = bus_count();
    // Bus balances: device injections minus load draw.
    for (int b = 0; b < nb; ++b) {
        const double* v = x + 2 * b;
        double* dv = dx + 2 * b;
        const double g = buses_[b].g;
        dv[0] = injections[2 * b + 0] - g * v[0];
        dv[1] = injections[2 * b + 1] - g * v[1];
    }
    // Branch currents and their bus contributions.
    for (std::size_t k = 0; k < branches_.size(); ++k) {
        const auto& br = branches_[k];
        const double* i = x + 2 * (nb + static_cast<int>(k));
        double* di = dx + 2 * (nb + static_cast<int>(k));
        const double* vf = x + 2 * br.from;
        const double* vt = x + 2 * br.to;
        const double inv_a = 1.0 / br.ratio;
        di[0] = (vf[0] * inv_a - vt[0] - br.r * i[0]) / br.l;
        di[1] = (vf[1] * inv_a - vt[1] - br.r * i[1]) / br.l;
        dx[2 * br.from + 0] -= i[0] * inv_a;
        dx[2 * br.from + 1] -= i[1] * inv_a;
        dx[2 * br.to + 0] += i[0];
        dx[2 * br.to + 1] += i[1];
    }
    // Divide accumulated bus currents by capacitance.
    for (int b = 0; b < nb; ++b) {
        dx[2 * b + 0] /= buses_[b].c;
        dx[2 * b + 1] /= buses_[b].c;
    }
}

void NetworkModel::apply_load_step(int bus, double delta_p) {
    check_bus(bus, "load step");
    const double v = buses_[bus].v_base;
    buses_[bus].g += delta_p / (v * v);
}

// =============================================================================
// Dataset parsing
// =============================================================================

const NetworkDataset::BusRec& NetworkDataset::bus(int id) const {
    for (const auto& b : buses) {
        if (b.id == id) return b;
    }
    throw std::out_of_range("NetworkDataset: no bus " + std::to_string(id));
}

namespace {

[[noreturn]] void parse_fail(const std::string& origin, int line_no, const std::string& what) {
    throw std::invalid_argument(origin + ":" + std::to_string(line_no) + ": " + what);
}

double to_double(const std::string& tok, const std::string& origin, int line_no) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        parse_fail(origin, line_no, "expected a number, got '" + tok + "'");
    }
}

int to_int(const std::string& tok, const std::string& origin, int line_no) {
    try {
        std::size_t pos = 0;
        const int v = std::stoi(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        parse_fail(origin, line_no, "expected an integer, got '" + tok + "'");
    }
}

} // namespace

NetworkDataset parse_dataset(const std::string& text, const std::string& origin) {
    NetworkDataset ds;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    bool have_base = false;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        std::string line = (hash == std::string::npos) ? raw : raw.substr(0, hash);
        std::istringstream ls(line);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) tok.push_back(t);
        if (tok.empty()) continue;

        const std::string& kind = tok[0];
        if (kind == "base") {
            if (tok.size() != 4) parse_fail(origin, line_no, "base expects: S_VA V_LL_V F_HZ");
            ds.s_base = to_double(tok[1], origin, line_no);
            ds.v_base = to_double(tok[2], origin, line_no);
            ds.f_base = to_double(tok[3], origin, line_no);
            have_base = true;
        } else if (kind == "bus") {
            if (tok.size() < 3) parse_fail(origin, line_no, "bus expects: id V_LL_V [gen VSET_PU]");
            NetworkDataset::BusRec b;
            b.id = to_int(tok[1], origin, line_no);
            b.v_base = to_double(tok[2], origin, line_no);
            if (tok.size() >= 4) {
                if (tok[3] != "gen") parse_fail(origin, line_no, "unknown bus flag '" + tok[3] + "'");
                b.generator = true;
                b.v_set = (tok.size() >= 5) ? to_double(tok[4], origin, line_no) : 1.0;
            }
            ds.buses.push_back(b);
        } else if (kind == "line") {
            if (tok.size() != 6) parse_fail(origin, line_no, "line expects: from to R_PU X_PU B_PU");
            NetworkDataset::LineRec l;
            l.from = to_int(tok[1], origin, line_no);
            l.to = to_int(tok[2], origin, line_no);
            l.r_pu = to_double(tok[3], origin, line_no);
            l.x_pu = to_double(tok[4], origin, line_no);
            l.b_pu = to_double(tok[5], origin, line_no);
            ds.lines.push_back(l);
        } else if (kind == "transformer") {
            if (tok.size() != 3 && tok.size() != 5) {
                parse_fail(origin, line_no, "transformer expects: from to [R_PU X_PU]");
            }
            NetworkDataset::TransformerRec t;
            t.from = to_int(tok[1], origin, line_no);
            t.to = to_int(tok[2], origin, line_no);
            if (tok.size() == 5) {
                t.r_pu = to_double(tok[3], origin, line_no);
                t.x_pu = to_double(tok[4], origin, line_no);
            } else {
                t.r_pu = 0.0;
                t.x_pu = 0.10;  // default leakage when the record omits it
            }
            ds.transformers.push_back(t);
        } else if (kind == "load") {
            if (tok.size() != 3) parse_fail(origin, line_no, "load expects: bus P_W");
            NetworkDataset::LoadRec l;
            l.bus = to_int(tok[1], origin, line_no);
            l.p = to_double(tok[2], origin, line_no);
            ds.loads.push_back(l);
        } else {
            parse_fail(origin, line_no, "unknown record '" + kind + "'");
        }
    }
    if (!have_base) throw std::invalid_argument(origin + ": missing 'base' record");
    if (ds.buses.empty()) throw std::invalid_argument(origin + ": no bus records");

    auto check_ref = [&](int id, const char* what) {
        for (const auto& b : ds.buses) {
            if (b.id == id) return;
        }
        throw std::invalid_argument(origin + ": " + what + " references unknown bus " +
                                    std::to_string(id));
    };
    for (const auto& l : ds.lines) {
        check_ref(l.from, "line");
        check_ref(l.to, "line");
    }
    for (const auto& t : ds.transformers) {
        check_ref(t.from, "transformer");
        check_ref(t.to, "transformer");
    }
    for (const auto& l : ds.loads) check_ref(l.bus, "load");
    return ds;
}

NetworkDataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open dataset file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_dataset(ss.str(), path.filename().string());
}

} // namespace gfsim
