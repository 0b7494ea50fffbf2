#include <iostream>

#include "phonon_forge_cli/app.hpp"

int main(int argc, char** argv) {
    return phonon_forge::cli::run(argc, argv, std::cout, std::cerr);
}
