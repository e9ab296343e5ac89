#include "mlselect/cli.hpp"

int main(int argc, char** argv) { return mlselect::cli::run(argc, argv); }
