// Serves a toy model over the line-delimited JSON oracle protocol, on stdio or
// on a TCP port (one thread per connection).

#include <sys/socket.h>
#include <unistd.h>

#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "sparsevo/errors.hpp"
#include "sparsevo/toy_models.hpp"
#include "sparsevo/wire.hpp"

namespace sv = sparsevo;

int main(int argc, char** argv) {
  CLI::App app{"Toy model oracle server"};
  std::string model_selector, shape_text = "3x32x32", transport = "stdio", port_file;
  int classes = 10;
  app.add_option("--model", model_selector, "toy:linear:<seed> | toy:mlp2:<seed> | toy:centroid:<path>")->required();
  app.add_option("--shape", shape_text, "CxWxH for seeded models")->capture_default_str();
  app.add_option("--classes", classes)->capture_default_str();
  app.add_option("--transport", transport, "stdio | tcp:<port> (0 picks a free port)")->capture_default_str();
  app.add_option("--port-file", port_file, "Write the bound TCP port here once listening");
  CLI11_PARSE(app, argc, argv);

  try {
    sv::Shape shape;
    char x1 = 0, x2 = 0;
    std::istringstream in(shape_text);
    if (!(in >> shape.channels >> x1 >> shape.width >> x2 >> shape.height) || x1 != 'x' || x2 != 'x') {
      throw sv::ContractError("shape must look like 3x32x32");
    }
    const auto model = sv::parse_toy_selector(model_selector, shape, classes);
    const sv::wire::Meta meta{model->num_classes(), model->input_shape()};
    const auto classify = [model](const sv::ImageTensor& image) { return model->classify(image); };

    if (transport == "stdio") {
      sv::wire::FdChannel channel(STDIN_FILENO, STDOUT_FILENO, false);
      sv::wire::serve(channel, meta, classify);
      return 0;
    }
    if (!transport.starts_with("tcp:")) throw sv::ContractError("transport must be stdio or tcp:<port>");
    std::uint16_t port = 0;
    const int listener = sv::wire::listen_tcp(static_cast<std::uint16_t>(std::stoul(transport.substr(4))), &port);
    if (!port_file.empty()) {
      const std::string tmp = port_file + ".tmp";
      std::ofstream(tmp) << port << '\n';
      std::filesystem::rename(tmp, port_file);
    }
    std::cerr << "listening on port " << port << '\n';
    for (;;) {
      const int fd = ::accept(listener, nullptr, nullptr);
      if (fd < 0) continue;
      std::thread([fd, meta, classify] {
        try {
          sv::wire::FdChannel channel(fd, fd, true);
          sv::wire::serve(channel, meta, classify);
        } catch (const std::exception& e) {
          std::cerr << "connection closed: " << e.what() << '\n';
        }
      }).detach();
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
