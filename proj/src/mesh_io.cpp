#include <lbo/mesh_io.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace lbo {

namespace {

[[noreturn]] void parse_error(long line, const std::string& msg)
{
    throw MeshError(MeshError::Kind::Parse, line, "line " + std::to_string(line) + ": " + msg);
}

std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

/// Line reader that skips blank lines and '#' comments and tracks line numbers.
class LineReader {
public:
    explicit LineReader(std::istream& in) : m_in(in) {}

    bool next(std::string& line)
    {
        while (std::getline(m_in, line)) {
            ++m_line;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            if (line.find_first_not_of(" \t") != std::string::npos) return true;
        }
        return false;
    }

    long line() const { return m_line; }

private:
    std::istream& m_in;
    long m_line = 0;
};

Mesh build(std::vector<double>& coords, std::vector<int>& tris)
{
    Positions V(static_cast<Eigen::Index>(coords.size() / 3), 3);
    for (Eigen::Index i = 0; i < V.rows(); ++i)
        for (int k = 0; k < 3; ++k) V(i, k) = coords[3 * i + k];
    Faces F(static_cast<Eigen::Index>(tris.size() / 3), 3);
    for (Eigen::Index i = 0; i < F.rows(); ++i)
        for (int k = 0; k < 3; ++k) F(i, k) = tris[3 * i + k];
    return Mesh(std::move(V), std::move(F));
}

} // namespace

MeshFormat parse_mesh_format(const std::string& name)
{
    const std::string n = lower(name);
    if (n.empty() || n == "auto") return MeshFormat::Auto;
    if (n == "off") return MeshFormat::OFF;
    if (n == "obj") return MeshFormat::OBJ;
    if (n == "ply" || n == "ply-ascii") return MeshFormat::PLY;
    throw std::invalid_argument("unknown mesh format '" + name + "'");
}

Mesh load_mesh(const std::string& path, MeshFormat format)
{
    if (format == MeshFormat::Auto) {
        const auto dot = path.rfind('.');
        format = parse_mesh_format(dot == std::string::npos ? "" : path.substr(dot + 1));
        if (format == MeshFormat::Auto) {
            throw MeshError(MeshError::Kind::Parse, -1, "cannot infer mesh format of " + path);
        }
    }
    std::ifstream in(path);
    if (!in) throw MeshError(MeshError::Kind::Parse, -1, "cannot open " + path);
    switch (format) {
    case MeshFormat::OFF: return read_off(in);
    case MeshFormat::OBJ: return read_obj(in);
    case MeshFormat::PLY: return read_ply_ascii(in);
    default: break;
    }
    throw MeshError(MeshError::Kind::Parse, -1, "unsupported format for " + path);
}

Mesh read_off(std::istream& in)
{
    LineReader reader(in);
    std::string line;
    if (!reader.next(line)) parse_error(reader.line(), "empty file");

    std::istringstream header(line);
    std::string magic;
    header >> magic;
    if (magic != "OFF") parse_error(reader.line(), "missing OFF header");
    long nv = -1, nf = -1, ne = 0;
    // Counts may follow the magic on the same line.
    if (!(header >> nv >> nf >> ne)) {
        if (!reader.next(line)) parse_error(reader.line(), "missing element counts");
        std::istringstream counts(line);
        if (!(counts >> nv >> nf)) parse_error(reader.line(), "malformed element counts");
    }
    if (nv < 0 || nf < 0) parse_error(reader.line(), "negative element counts");

    std::vector<double> coords;
    coords.reserve(3 * nv);
    for (long i = 0; i < nv; ++i) {
        if (!reader.next(line)) parse_error(reader.line(), "unexpected end of vertex list");
        std::istringstream ls(line);
        double x, y, z;
        if (!(ls >> x >> y >> z)) parse_error(reader.line(), "malformed vertex");
        coords.insert(coords.end(), {x, y, z});
    }
    std::vector<int> tris;
    tris.reserve(3 * nf);
    for (long i = 0; i < nf; ++i) {
        if (!reader.next(line)) parse_error(reader.line(), "unexpected end of face list");
        std::istringstream ls(line);
        int n, a, b, c;
        if (!(ls >> n)) parse_error(reader.line(), "malformed face");
        if (n != 3) parse_error(reader.line(), "only triangles are supported");
        if (!(ls >> a >> b >> c)) parse_error(reader.line(), "malformed face");
        tris.insert(tris.end(), {a, b, c});
    }
    return build(coords, tris);
}

Mesh read_obj(std::istream& in)
{
    LineReader reader(in);
    std::string line;
    std::vector<double> coords;
    std::vector<int> tris;
    while (reader.next(line)) {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "v") {
            double x, y, z;
            if (!(ls >> x >> y >> z)) parse_error(reader.line(), "malformed vertex");
            coords.insert(coords.end(), {x, y, z});
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string tok;
            while (ls >> tok) {
                // v, v/vt, v//vn, v/vt/vn
                const auto slash = tok.find('/');
                int i = 0;
                try {
                    i = std::stoi(tok.substr(0, slash));
                } catch (const std::exception&) {
                    parse_error(reader.line(), "malformed face index '" + tok + "'");
                }
                const int nv = static_cast<int>(coords.size() / 3);
                if (i > 0) idx.push_back(i - 1);
                else if (i < 0) idx.push_back(nv + i);
                else parse_error(reader.line(), "face index 0 is invalid in OBJ");
            }
            if (idx.size() != 3) parse_error(reader.line(), "only triangles are supported");
            tris.insert(tris.end(), idx.begin(), idx.end());
        }
    }
    return build(coords, tris);
}

Mesh read_ply_ascii(std::istream& in)
{
    LineReader reader(in);
    std::string line;
    if (!reader.next(line) || lower(line).rfind("ply", 0) != 0) parse_error(reader.line(), "missing ply magic");

    struct Element {
        std::string name;
        long count = 0;
        std::vector<std::string> props; // scalar names; "list" entries marked "@list:name"
    };
    std::vector<Element> elements;
    bool ascii = false;
    while (true) {
        if (!reader.next(line)) parse_error(reader.line(), "unterminated header");
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "format") {
            std::string fmt;
            ls >> fmt;
            ascii = fmt == "ascii";
        } else if (tag == "element") {
            Element el;
            ls >> el.name >> el.count;
            elements.push_back(el);
        } else if (tag == "property") {
            if (elements.empty()) parse_error(reader.line(), "property before element");
            std::string type;
            ls >> type;
            if (type == "list") {
                std::string ct, it, name;
                ls >> ct >> it >> name;
                elements.back().props.push_back("@list:" + name);
            } else {
                std::string name;
                ls >> name;
                elements.back().props.push_back(name);
            }
        } else if (tag == "end_header") {
            break;
        }
    }
    if (!ascii) parse_error(reader.line(), "only ascii PLY is supported");

    std::vector<double> coords;
    std::vector<int> tris;
    for (const auto& el : elements) {
        const auto find = [&](const std::string& n) {
            const auto it = std::find(el.props.begin(), el.props.end(), n);
            return it == el.props.end() ? -1 : static_cast<int>(it - el.props.begin());
        };
        const int ix = find("x"), iy = find("y"), iz = find("z");
        if (el.name == "vertex" && (ix < 0 || iy < 0 || iz < 0))
            parse_error(reader.line(), "vertex element lacks x/y/z");
        for (long r = 0; r < el.count; ++r) {
            if (!reader.next(line)) parse_error(reader.line(), "unexpected end of " + el.name + " data");
            std::istringstream ls(line);
            std::vector<double> scalars(el.props.size(), 0.0);
            std::vector<int> list;
            for (size_t p = 0; p < el.props.size(); ++p) {
                if (el.props[p].rfind("@list:", 0) == 0) {
                    int n;
                    if (!(ls >> n)) parse_error(reader.line(), "malformed list");
                    std::vector<int> vals(n);
                    for (int& v : vals)
                        if (!(ls >> v)) parse_error(reader.line(), "malformed list");
                    if (el.props[p] == "@list:vertex_indices" || el.props[p] == "@list:vertex_index") list = vals;
                } else if (!(ls >> scalars[p])) {
                    parse_error(reader.line(), "malformed " + el.name + " record");
                }
            }
            if (el.name == "vertex") {
                coords.insert(coords.end(), {scalars[ix], scalars[iy], scalars[iz]});
            } else if (el.name == "face") {
                if (list.size() != 3) parse_error(reader.line(), "only triangles are supported");
                tris.insert(tris.end(), list.begin(), list.end());
            }
        }
    }
    return build(coords, tris);
}

void write_off(const Mesh& mesh, std::ostream& out)
{
    out << "OFF\n" << mesh.num_vertices() << ' ' << mesh.num_faces() << ' ' << mesh.num_edges() << '\n';
    out << std::setprecision(17);
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        const auto& p = mesh.positions();
        out << p(v, 0) << ' ' << p(v, 1) << ' ' << p(v, 2) << '\n';
    }
    for (int f = 0; f < mesh.num_faces(); ++f) {
        const auto c = mesh.face(f);
        out << "3 " << c[0] << ' ' << c[1] << ' ' << c[2] << '\n';
    }
}

void save_off(const Mesh& mesh, const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    write_off(mesh, out);
}

} // namespace lbo
