use pourpitch::io::container::{read_container, write_container};
use pourpitch::io::tables::{read_pixel_track, read_track, write_pixel_track, write_track};
use pourpitch::io::wav::{read_wav, write_wav};
use pourpitch_core::cosup::{PixelFrame, PixelTrack};
use pourpitch_core::{AudioBuffer, ContainerSpec, Neck, PhysicsConstants, PitchFrame, PitchTrack, TrackSource};
use proptest::prelude::*;

fn container() -> impl Strategy<Value = ContainerSpec> {
    prop_oneof![
        (0.05f64..0.3, 0.01f64..0.06).prop_map(|(h, r)| ContainerSpec::cylinder(h, r).unwrap()),
        (0.05f64..0.3, 0.01f64..0.04, 1.0f64..3.0)
            .prop_map(|(h, r, k)| ContainerSpec::frustum(h, r, r * k).unwrap()),
        (0.08f64..0.3, 0.03f64..0.06, 0.005f64..0.02, 0.01f64..0.05).prop_map(|(h, r, nr, nl)| {
            ContainerSpec::bottleneck(h, r, Neck { length: nl, radius: nr }).unwrap()
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn container_toml_round_trips(spec in container()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        write_container(&path, &spec).unwrap();
        prop_assert_eq!(read_container(&path).unwrap(), spec);
    }

    #[test]
    fn track_csv_round_trips(freqs in prop::collection::vec(prop::option::of(50.0f64..8000.0), 1..80)) {
        let c = PhysicsConstants::default();
        let frames: Vec<PitchFrame> = freqs
            .iter()
            .enumerate()
            .map(|(i, f)| match f {
                Some(f) => PitchFrame::voiced(i as f64 * 0.016, *f, 0.5, &c),
                None => PitchFrame::unvoiced(i as f64 * 0.016, 0.0),
            })
            .collect();
        let track = PitchTrack::new(frames, TrackSource::Argmax);
        let rms: Vec<f64> = (0..freqs.len()).map(|i| i as f64 * 0.01).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_track(&path, &track, Some(&rms)).unwrap();
        let back = read_track(&path, &c).unwrap();
        prop_assert_eq!(&back.track.frames, &track.frames);
        let times: Vec<f64> = back.rms.unwrap().iter().map(|p| p.1).collect();
        prop_assert_eq!(times, rms);
    }

    #[test]
    fn pixel_csv_round_trips(ls in prop::collection::vec(0.0f64..500.0, 1..60), r in 1.0f64..100.0) {
        let frames = ls.iter().enumerate().map(|(i, &l)| PixelFrame { t: i as f64 / 30.0, l_px: l }).collect();
        let track = PixelTrack::new(frames, r, 720.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        write_pixel_track(&path, &track).unwrap();
        prop_assert_eq!(read_pixel_track(&path).unwrap(), track);
    }

    #[test]
    fn wav_round_trip_is_within_quantization(samples in prop::collection::vec(-0.9f64..0.9, 1..2000)) {
        let audio = AudioBuffer::new(16000, samples).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.wav");
        write_wav(&path, &audio).unwrap();
        let back = read_wav(&path, 16000).unwrap();
        prop_assert_eq!(back.len(), audio.len());
        for (a, b) in audio.samples.iter().zip(&back.samples) {
            prop_assert!((a - b).abs() <= 0.5 / 32768.0 + 1e-15);
        }
    }
}
