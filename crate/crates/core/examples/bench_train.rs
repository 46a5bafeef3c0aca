// quick throughput probe
use optossm::data::*;
use optossm::model::*;
use optossm::train::*;
use std::time::Instant;

fn main() {
    let fs = 48000.0;
    let x = test_signal(4.0, fs, 1);
    let s = OracleSettings { threshold_db: -10.0, ratio: 6.0, attack_ms: 5.0, release_ms: 200.0, makeup_db: 0.0 };
    let y = synth_compressor(&x, &s, fs).unwrap();
    let rec = Recording::new("b", x, y, 48000, RawControls::Cl1b {
        threshold_dbu: -10.0, ratio: 6.0, attack_ms: 5.0, release_s: 0.2 }).unwrap();
    for arch in [Arch::S6, Arch::S4d, Arch::Ed, Arch::Lstm] {
        let cfg = ModelConfig::new(arch, Device::Cl1b);
        let mut store = build_model(&cfg, 1).unwrap();
        let tc = TrainConfig { max_epochs: 1, patience: 1, batch_size: 512, ..TrainConfig::default() };
        let t0 = Instant::now();
        let out = train(&mut store, std::slice::from_ref(&rec), &tc).unwrap();
        let dt = t0.elapsed().as_secs_f64();
        let examples = (0.9 * 0.9 * 4.0 * fs) as f64;
        println!("{arch}: {:.1} s/epoch, {:.2} us/example, val {:.3e}", dt, dt / examples * 1e6, out.best_val_loss);
    }

    // inference throughput
    let cfg = ModelConfig::new(Arch::S6, Device::Cl1b);
    let mut store = build_model(&cfg, 1).unwrap();
    let model = Model::attach(&mut store).unwrap();
    let ctrl = optossm::blocks::ControlParams::new(Device::Cl1b, vec![0.25, 0.5], vec![0.0, 1.0]).unwrap();
    let audio = test_signal(1.0, fs, 2);
    let mut stream = model.new_stream();
    let t0 = Instant::now();
    let out = model.process_stream(&store, &mut stream, &audio, &ctrl, 4096).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    println!("inference: {:.0} samples/s (out len {})", audio.len() as f64 / dt, out.len());
}
