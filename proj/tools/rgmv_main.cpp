#include "rgmv/cli.hpp"

int main(int argc, char** argv) {
    return rgmv::cli::run(argc, argv);
}
