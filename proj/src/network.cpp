#include "seizurecast/network.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <utility>

#include <json.hpp>

#include "seizurecast/errors.hpp"

namespace seizurecast {

namespace {

constexpr const char* kModelMagic = "SEIZURECAST-MODEL v1";
constexpr int kFormatVersion = 1;

std::string kernel_string(const KernelSize& k) {
    return std::to_string(k.h) + "x" + std::to_string(k.w);
}

Network make_network(const NetworkConfig& config) {
    Network net;
    net.config = config;
    net.shapes = propagate_shapes(config);

    Eigen::Index c_in = 1;
    for (std::size_t k = 0; k < net.blocks.size(); ++k) {
        ConvBlock& blk = net.blocks[k];
        blk.conv = {config.conv_channels[k], config.conv_kernels[k].h, config.conv_kernels[k].w};
        blk.pool = {config.pool_kernels[k].h, config.pool_kernels[k].w};
        blk.weights = Tensor({blk.conv.out_channels, c_in, blk.conv.kernel_h, blk.conv.kernel_w});
        blk.bias = Tensor({blk.conv.out_channels});
        c_in = blk.conv.out_channels;
    }

    const Eigen::Index flat = net.shapes.flatten_length;
    net.fc1 = {Tensor({config.fc_sizes[0], flat}), Tensor({config.fc_sizes[0]})};
    net.fc2 = {Tensor({config.fc_sizes[1], config.fc_sizes[0]}), Tensor({config.fc_sizes[1]})};
    net.out = {Tensor({config.num_classes, config.fc_sizes[1]}), Tensor({config.num_classes})};
    return net;
}

void glorot_fill(Tensor& weights, Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
        weights.data[i] = rng.uniform(-bound, bound);
    }
}

void put_f64le(std::string& buf, double v) {
    const auto u = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
}

double get_f64le(const unsigned char* p) {
    std::uint64_t u = 0;
    for (int i = 7; i >= 0; --i) u = (u << 8) | p[i];
    return std::bit_cast<double>(u);
}

nlohmann::json config_to_json(const NetworkConfig& c) {
    nlohmann::json j;
    j["input_channels"] = c.input_channels;
    j["input_width"] = c.input_width;
    auto kernels = [](const std::array<KernelSize, 5>& ks) {
        nlohmann::json a = nlohmann::json::array();
        for (const KernelSize& k : ks) a.push_back({k.h, k.w});
        return a;
    };
    j["conv_kernels"] = kernels(c.conv_kernels);
    j["pool_kernels"] = kernels(c.pool_kernels);
    j["conv_channels"] = c.conv_channels;
    j["fc_sizes"] = c.fc_sizes;
    j["dropout_rate"] = c.dropout_rate;
    j["num_classes"] = c.num_classes;
    return j;
}

NetworkConfig config_from_json(const nlohmann::json& j) {
    NetworkConfig c;
    c.input_channels = j.at("input_channels").get<Eigen::Index>();
    c.input_width = j.at("input_width").get<Eigen::Index>();
    auto kernels = [](const nlohmann::json& a, std::array<KernelSize, 5>& out) {
        if (!a.is_array() || a.size() != out.size()) {
            throw ParseError("model header: kernel list must have " +
                             std::to_string(out.size()) + " entries");
        }
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i] = {a[i].at(0).get<Eigen::Index>(), a[i].at(1).get<Eigen::Index>()};
        }
    };
    kernels(j.at("conv_kernels"), c.conv_kernels);
    kernels(j.at("pool_kernels"), c.pool_kernels);
    const auto& ch = j.at("conv_channels");
    if (!ch.is_array() || ch.size() != c.conv_channels.size()) {
        throw ParseError("model header: conv_channels must have 5 entries");
    }
    for (std::size_t i = 0; i < c.conv_channels.size(); ++i) {
        c.conv_channels[i] = ch[i].get<Eigen::Index>();
    }
    const auto& fc = j.at("fc_sizes");
    if (!fc.is_array() || fc.size() != c.fc_sizes.size()) {
        throw ParseError("model header: fc_sizes must have 2 entries");
    }
    for (std::size_t i = 0; i < c.fc_sizes.size(); ++i) {
        c.fc_sizes[i] = fc[i].get<Eigen::Index>();
    }
    c.dropout_rate = j.at("dropout_rate").get<double>();
    c.num_classes = j.at("num_classes").get<Eigen::Index>();
    return c;
}

} // namespace

NetworkConfig NetworkConfig::standard(Eigen::Index channels, Eigen::Index width) {
    NetworkConfig c;
    c.input_channels = channels;
    c.input_width = width;
    return c;
}

NetworkConfig NetworkConfig::reduced(Eigen::Index channels, Eigen::Index width) {
    NetworkConfig c;
    c.input_channels = channels;
    c.input_width = width;
    c.pool_kernels = {{{1, 5}, {1, 5}, {1, 2}, {2, 2}, {2, 2}}};
    return c;
}

void NetworkConfig::validate() const {
    if (input_channels < 1 || input_width < 1) {
        throw ParamError("network config: input must be at least 1x1, got " +
                         std::to_string(input_channels) + "x" + std::to_string(input_width));
    }
    for (std::size_t k = 0; k < conv_kernels.size(); ++k) {
        if (conv_kernels[k].h < 1 || conv_kernels[k].w < 1) {
            throw ParamError("network config: conv" + std::to_string(k + 1) +
                             " kernel must be positive, got " + kernel_string(conv_kernels[k]));
        }
        if (pool_kernels[k].h < 1 || pool_kernels[k].w < 1) {
            throw ParamError("network config: pool" + std::to_string(k + 1) +
                             " size must be positive, got " + kernel_string(pool_kernels[k]));
        }
        if (conv_channels[k] < 1) {
            throw ParamError("network config: conv" + std::to_string(k + 1) +
                             " channel count must be positive");
        }
    }
    if (fc_sizes[0] < 1 || fc_sizes[1] < 1) {
        throw ParamError("network config: dense sizes must be positive");
    }
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
        throw ParamError("network config: dropout rate must lie in [0, 1), got " +
                         std::to_string(dropout_rate));
    }
    if (num_classes < 2) {
        throw ParamError("network config: need at least 2 classes");
    }
}

ShapeTable propagate_shapes(const NetworkConfig& config) {
    config.validate();
    ShapeTable table;
    Eigen::Index c = 1;
    Eigen::Index h = config.input_channels;
    Eigen::Index w = config.input_width;
    table.rows.push_back({"input", c, h, w});
    for (std::size_t k = 0; k < config.conv_kernels.size(); ++k) {
        const std::string idx = std::to_string(k + 1);
        c = config.conv_channels[k];
        table.rows.push_back({"conv" + idx, c, h, w});
        const KernelSize p = config.pool_kernels[k];
        const Eigen::Index oh = h / p.h;
        const Eigen::Index ow = w / p.w;
        if (oh < 1 || ow < 1) {
            throw ShapeError("pool" + idx + " (" + kernel_string(p) + "): input " +
                             std::to_string(c) + "x" + std::to_string(h) + "x" +
                             std::to_string(w) + " leaves an empty output");
        }
        h = oh;
        w = ow;
        table.rows.push_back({"pool" + idx, c, h, w});
    }
    table.flatten_length = c * h * w;
    return table;
}

Eigen::Index parameter_count(const NetworkConfig& config) {
    const ShapeTable table = propagate_shapes(config);
    Eigen::Index total = 0;
    Eigen::Index c_in = 1;
    for (std::size_t k = 0; k < config.conv_kernels.size(); ++k) {
        const Eigen::Index c_out = config.conv_channels[k];
        total += c_out * c_in * config.conv_kernels[k].h * config.conv_kernels[k].w + c_out;
        c_in = c_out;
    }
    total += config.fc_sizes[0] * table.flatten_length + config.fc_sizes[0];
    total += config.fc_sizes[1] * config.fc_sizes[0] + config.fc_sizes[1];
    total += config.num_classes * config.fc_sizes[1] + config.num_classes;
    return total;
}

std::vector<ParameterRef> parameters(Network& net) {
    std::vector<ParameterRef> refs;
    refs.reserve(16);
    for (std::size_t k = 0; k < net.blocks.size(); ++k) {
        const std::string idx = std::to_string(k + 1);
        refs.push_back({"conv" + idx + ".weights", &net.blocks[k].weights});
        refs.push_back({"conv" + idx + ".bias", &net.blocks[k].bias});
    }
    refs.push_back({"fc1.weights", &net.fc1.weights});
    refs.push_back({"fc1.bias", &net.fc1.bias});
    refs.push_back({"fc2.weights", &net.fc2.weights});
    refs.push_back({"fc2.bias", &net.fc2.bias});
    refs.push_back({"out.weights", &net.out.weights});
    refs.push_back({"out.bias", &net.out.bias});
    return refs;
}

std::vector<ConstParameterRef> parameters(const Network& net) {
    std::vector<ConstParameterRef> refs;
    for (const ParameterRef& r : parameters(const_cast<Network&>(net))) {
        refs.push_back({r.name, r.tensor});
    }
    return refs;
}

Network build_network(const NetworkConfig& config, Rng& rng) {
    Network net = make_network(config);
    for (ConvBlock& blk : net.blocks) {
        const Eigen::Index taps = blk.weights.shape[1] * blk.conv.kernel_h * blk.conv.kernel_w;
        glorot_fill(blk.weights, taps, blk.conv.out_channels * blk.conv.kernel_h * blk.conv.kernel_w,
                    rng);
    }
    for (DenseLayer* layer : {&net.fc1, &net.fc2, &net.out}) {
        glorot_fill(layer->weights, layer->weights.shape[1], layer->weights.shape[0], rng);
    }
    return net;
}

ForwardTrace forward_trace(const Network& net, const Tensor& input, bool training,
                           Rng* dropout_rng) {
    const Eigen::Index ch = net.config.input_channels;
    const Eigen::Index w = net.config.input_width;

    Tensor x;
    if (input.rank() == 2 && input.shape[0] == ch && input.shape[1] == w) {
        x = Tensor({1, ch, w}, input.data);
    } else if (input.rank() == 3 && input.shape == std::vector<Eigen::Index>{1, ch, w}) {
        x = input;
    } else {
        throw ShapeError("network: input is " + shape_string(input.shape) + ", configured for " +
                         std::to_string(ch) + "x" + std::to_string(w));
    }
    if (training && net.config.dropout_rate > 0.0 && dropout_rng == nullptr) {
        throw ParamError("network: training forward needs an rng for dropout");
    }

    ForwardTrace trace;
    trace.input = std::move(x);
    const Tensor* current = &trace.input;
    for (std::size_t k = 0; k < net.blocks.size(); ++k) {
        const ConvBlock& blk = net.blocks[k];
        trace.conv_out[k] = conv2d_forward(*current, blk.weights, blk.bias, blk.conv);
        trace.relu_out[k] = relu(trace.conv_out[k]);
        trace.pool_out[k] = maxpool_forward(trace.relu_out[k], blk.pool, &trace.pool_ctx[k]);
        current = &trace.pool_out[k];
    }

    Tensor flat({net.shapes.flatten_length}, trace.pool_out.back().data);
    Rng unused(0);
    DropoutResult dropped = dropout(flat, net.config.dropout_rate, training,
                                    dropout_rng ? *dropout_rng : unused);
    trace.dropout_mask = std::move(dropped.mask);
    trace.fc_input = std::move(dropped.output);

    trace.fc1_out = sigmoid(dense_forward(trace.fc_input, net.fc1.weights, net.fc1.bias));
    trace.fc2_out = sigmoid(dense_forward(trace.fc1_out, net.fc2.weights, net.fc2.bias));
    trace.logits = dense_forward(trace.fc2_out, net.out.weights, net.out.bias);
    return trace;
}

Tensor forward(const Network& net, const Tensor& input, bool training, Rng* dropout_rng) {
    return softmax(forward_trace(net, input, training, dropout_rng).logits);
}

double preictal_probability(const Network& net, const Tensor& input) {
    return forward(net, input).data[1];
}

double backward(Network& net, const ForwardTrace& trace, int label, double scale) {
    if (trace.logits.rank() == 0) {
        throw ParamError("network backward: empty trace; run forward_trace first");
    }
    const SoftmaxLossResult loss = softmax_cross_entropy(trace.logits, label);

    auto accumulate = [scale](Tensor& param, const Tensor& g) {
        param.ensure_grad();
        *param.grad += scale * g.data;
    };

    DenseGrads d = dense_backward(loss.grad_logits, trace.fc2_out, net.out.weights);
    accumulate(net.out.weights, d.weights);
    accumulate(net.out.bias, d.bias);

    Tensor g = sigmoid_backward(d.input, trace.fc2_out);
    d = dense_backward(g, trace.fc1_out, net.fc2.weights);
    accumulate(net.fc2.weights, d.weights);
    accumulate(net.fc2.bias, d.bias);

    g = sigmoid_backward(d.input, trace.fc1_out);
    d = dense_backward(g, trace.fc_input, net.fc1.weights);
    accumulate(net.fc1.weights, d.weights);
    accumulate(net.fc1.bias, d.bias);

    g = dropout_backward(d.input, trace.dropout_mask);

    const Tensor& last_pool = trace.pool_out.back();
    Tensor g3(last_pool.shape, std::move(g.data));
    for (std::size_t k = net.blocks.size(); k-- > 0;) {
        Tensor gp = maxpool_backward(g3, trace.pool_ctx[k]);
        Tensor gr = relu_backward(gp, trace.conv_out[k]);
        const Tensor& block_input = (k == 0) ? trace.input : trace.pool_out[k - 1];
        ConvGrads cg = conv2d_backward(gr, block_input, net.blocks[k].weights, k > 0);
        accumulate(net.blocks[k].weights, cg.weights);
        accumulate(net.blocks[k].bias, cg.bias);
        if (k > 0) g3 = std::move(cg.input);
    }
    return loss.loss;
}

void zero_gradients(Network& net) {
    for (ParameterRef& ref : parameters(net)) ref.tensor->zero_grad();
}

void save_network(const Network& net, const std::filesystem::path& path) {
    nlohmann::json header;
    header["format_version"] = kFormatVersion;
    header["config"] = config_to_json(net.config);
    header["flatten_length"] = net.shapes.flatten_length;
    nlohmann::json dir = nlohmann::json::array();
    for (const ConstParameterRef& ref : parameters(net)) {
        dir.push_back({{"name", ref.name}, {"shape", ref.tensor->shape}});
    }
    header["tensors"] = dir;

    std::string payload;
    Eigen::Index total = 0;
    for (const ConstParameterRef& ref : parameters(net)) total += ref.tensor->size();
    payload.reserve(static_cast<std::size_t>(total) * 8);
    for (const ConstParameterRef& ref : parameters(net)) {
        for (Eigen::Index i = 0; i < ref.tensor->size(); ++i) {
            put_f64le(payload, ref.tensor->data[i]);
        }
    }

    std::ofstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open " + path.string() + " for writing");
    file << kModelMagic << '\n' << header.dump() << '\n';
    file.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    file.flush();
    if (!file.good()) throw IoError("failed writing " + path.string());
}

Network load_network(const std::filesystem::path& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());

    const std::size_t magic_end = bytes.find('\n');
    if (magic_end == std::string::npos) throw ParseError(path.string() + ": not a model file");
    const std::string magic = bytes.substr(0, magic_end);
    if (magic != kModelMagic) {
        if (magic.starts_with("SEIZURECAST-MODEL")) {
            throw ParseError(path.string() + ": unsupported model format version \"" + magic + "\"");
        }
        throw ParseError(path.string() + ": not a model file (bad magic)");
    }

    const std::size_t header_end = bytes.find('\n', magic_end + 1);
    if (header_end == std::string::npos) throw ParseError(path.string() + ": missing header");

    nlohmann::json header;
    NetworkConfig config;
    try {
        header = nlohmann::json::parse(bytes.substr(magic_end + 1, header_end - magic_end - 1));
        if (header.at("format_version").get<int>() != kFormatVersion) {
            throw ParseError(path.string() + ": unsupported format version");
        }
        config = config_from_json(header.at("config"));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": bad model header: " + e.what());
    }

    Network net;
    try {
        net = make_network(config);
    } catch (const Error& e) {
        throw ParseError(path.string() + ": header config is invalid: " + e.what());
    }

    std::vector<ParameterRef> refs = parameters(net);
    const auto& dir = header.at("tensors");
    if (!dir.is_array() || dir.size() != refs.size()) {
        throw ParseError(path.string() + ": tensor directory must list " +
                         std::to_string(refs.size()) + " tensors");
    }
    for (std::size_t i = 0; i < refs.size(); ++i) {
        std::string name;
        std::vector<Eigen::Index> shape;
        try {
            name = dir[i].at("name").get<std::string>();
            shape = dir[i].at("shape").get<std::vector<Eigen::Index>>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string() + ": bad tensor directory entry: " + e.what());
        }
        if (name != refs[i].name || shape != refs[i].tensor->shape) {
            throw ParseError(path.string() + ": tensor " + std::to_string(i) + " is " + name +
                             " " + shape_string(shape) + ", config implies " + refs[i].name + " " +
                             shape_string(refs[i].tensor->shape));
        }
    }

    Eigen::Index total = 0;
    for (const ParameterRef& ref : refs) total += ref.tensor->size();
    const std::size_t payload_size = bytes.size() - header_end - 1;
    if (payload_size != static_cast<std::size_t>(total) * 8) {
        throw ParseError(path.string() + ": payload holds " + std::to_string(payload_size) +
                         " bytes, header implies " + std::to_string(total * 8) +
                         " (truncated file?)");
    }

    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + header_end + 1;
    for (ParameterRef& ref : refs) {
        for (Eigen::Index i = 0; i < ref.tensor->size(); ++i) {
            ref.tensor->data[i] = get_f64le(p);
            p += 8;
        }
    }
    return net;
}

} // namespace seizurecast
