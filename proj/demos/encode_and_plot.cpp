// Build a two-speaker free-field scene, encode it to 3rd order, and emit
// the directional energy map. A minimal tour of the encoding front end.

#include <iostream>

#include "diffau/ambisonics.hpp"
#include "diffau/energy_plot.hpp"
#include "diffau/wav_io.hpp"

using namespace diffau;

int main(int argc, char** argv) {
    const std::string out = argc > 1 ? argv[1] : "scene";

    Rng rng(2024);
    PlaneWaveScene scene;
    scene.sample_rate = 16000.0;
    for (int q = 0; q < 2; ++q) {
        PlaneWaveSource src;
        src.doa = sample_doa(rng);
        src.waveform.resize(32768);
        double phase = 0.0;
        const double f0 = 110.0 * (q + 1);
        for (size_t i = 0; i < src.waveform.size(); ++i) {
            phase += kTwoPi * f0 / scene.sample_rate;
            src.waveform[i] = 0.4 * std::sin(phase) + 0.2 * std::sin(2.0 * phase);
        }
        scene.sources.push_back(std::move(src));
        std::cout << "source " << q << ": azimuth " << scene.sources.back().doa.azimuth << " colatitude "
                  << scene.sources.back().doa.colatitude << "\n";
    }

    const AmbisonicsSignal hoa = encode_scene(scene, 3);
    write_wav_float32(out + ".wav", hoa.channels, hoa.sample_rate);
    const EnergyPlotFiles files = emit_energy_plot(hoa, out);
    std::cout << "wrote " << out << ".wav, " << files.image.string() << ", " << files.table.string() << "\n";
    return 0;
}
