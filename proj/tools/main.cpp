#include "ads3d/commands.hpp"

int main(int argc, char** argv) { return ads3d::cli::run(argc, argv); }
