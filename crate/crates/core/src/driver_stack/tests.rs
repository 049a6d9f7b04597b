use super::unverified::{unverified_imu_read, unverified_transfer, PollOutcome, UnverifiedImu};
use super::*;
use crate::bus_model::regmap::spi_reg::*;
use crate::bus_model::{ChannelEnable, EventList, EventLog, SpiEvent, SpiMode};

fn reg() -> Registry {
    Registry::shipped(DriverConfig::default())
}

fn enabled() -> AbstractState {
    let mut a = AbstractState::default();
    a.spi.en = ChannelEnable::Enabled;
    a
}

fn with_spi_env(mut a: AbstractState, events: Vec<SpiEvent>) -> AbstractState {
    a.spi_env = EventList::new(events);
    a.spi_log = EventLog::new();
    a
}

#[test]
fn write_then_read_register() {
    let r = reg();
    for resolve in [Resolve::Spec, Resolve::Impl] {
        let mut mc = Machine::from_abstract(&r, AbstractState::default(), resolve);
        mc.exec(Call::RegWrite(1, CH0CTRL)).unwrap();
        assert_eq!(mc.exec(Call::RegRead(CH0CTRL)).unwrap(), Ret::Word(1));
        assert!(relate(&mc.a, &mc.m));
    }
}

#[test]
fn write_changes_only_target_field() {
    let r = reg();
    let a = AbstractState::default();
    for i in 0..25 {
        let mut mc = Machine::from_abstract(&r, a.clone(), Resolve::Impl);
        mc.exec(Call::RegWrite(1, crate::RegAddr(i))).unwrap();
        let diff: Vec<_> = mc.m.diff(&a.mirror());
        assert_eq!(diff.len(), 1, "register {i}");
    }
}

#[test]
fn enable_channel_high_spec() {
    let cfg = DriverConfig::default();
    let a = AbstractState::default();
    let (a2, _) = spi_layers::ch0en_high(&cfg, &Call::EnableChannel, &a).unwrap();
    assert_eq!(a2, AbstractState { spi: crate::bus_model::SpiState { en: ChannelEnable::Enabled, ..a.spi }, ..a.clone() });
    let (a3, _) = spi_layers::ch0en_high(&cfg, &Call::EnableChannel, &a2).unwrap();
    assert_eq!(a3, a2);

    let mut slave = a.clone();
    slave.spi.ms = SpiMode::Slave;
    assert!(spi_layers::ch0en_high(&cfg, &Call::EnableChannel, &slave).is_none());
}

#[test]
fn enable_channel_low_spec_touches_only_ctrl_cell() {
    let cfg = DriverConfig::default();
    let a = AbstractState::default();
    let m = a.mirror();
    let (m2, a2, _) = spi_layers::ch0en_low(&cfg, &Call::EnableChannel, &m, &a).unwrap();
    assert_eq!(m2.diff(&m), vec![(state::SPI_BASE + CH0CTRL.0, 1, 0)]);
    assert!(a2.spi.enabled());
}

#[test]
fn select_channel() {
    let r = reg();
    let mut mc = Machine::from_abstract(&r, AbstractState::default(), Resolve::Impl);
    mc.exec(Call::SelectChannel(true)).unwrap();
    assert!(mc.a.spi.enabled());
    assert_eq!(mc.a.spi.ch0conf, CONF_SELECT);
    mc.exec(Call::SelectChannel(false)).unwrap();
    assert_eq!(mc.a.spi.en, ChannelEnable::Disabled);

    let cfg = DriverConfig::default();
    let sel = |a: &AbstractState| spi_layers::ch0select_high(&cfg, &Call::SelectChannel(true), a).unwrap().0;
    let once = sel(&AbstractState::default());
    assert_eq!(sel(&once), once);
}

#[test]
fn transfer_delivers_within_three_polls() {
    let r = reg();
    let events = vec![SpiEvent::XferDone, SpiEvent::Null, SpiEvent::Null, SpiEvent::Recv(0xBEEF)];
    let a = with_spi_env(enabled(), events);

    let mut mc = Machine::from_abstract(&r, a.clone(), Resolve::Impl);
    assert_eq!(mc.exec(Call::Transfer(0xBB)).unwrap(), Ret::Xfer(Some(0xBEEF)));
    assert_eq!(mc.a.clock, 10);

    let mut spec = Machine::from_abstract(&r, a.clone(), Resolve::Spec);
    assert_eq!(spec.exec(Call::Transfer(0xBB)).unwrap(), Ret::Xfer(Some(0xBEEF)));
    assert_eq!(spec.a, mc.a);

    let mut un = Machine::from_abstract(&r, a, Resolve::Impl);
    assert_eq!(unverified_transfer(&mut un, 0xBB, 200_000).unwrap(), PollOutcome::Data(0xBEEF));
    assert_eq!(un.a, mc.a);
}

#[test]
fn transfer_times_out_on_exhausted_list() {
    let r = reg();
    let a = with_spi_env(enabled(), vec![SpiEvent::XferDone]);
    let mut mc = Machine::from_abstract(&r, a.clone(), Resolve::Impl).with_trace();
    assert_eq!(mc.exec(Call::Transfer(1)).unwrap(), Ret::Xfer(None));
    let polls = mc.trace().iter().filter(|c| **c == Call::RegRead(RX_FULL)).count();
    assert_eq!(polls, 16);
    assert_eq!(mc.a.clock, 80);

    let mut un = Machine::from_abstract(&r, a, Resolve::Impl);
    let out = unverified_transfer(&mut un, 1, 200_000).unwrap();
    assert_eq!(out, PollOutcome::Stalled { elapsed_us: 200_000, polls: 40_000 });
}

#[test]
fn zero_poll_budget_always_times_out() {
    let r = Registry::shipped(DriverConfig { k_poll: 0, poll_us: 5 });
    let a = with_spi_env(enabled(), vec![SpiEvent::Recv(3); 4]);
    let mut mc = Machine::from_abstract(&r, a, Resolve::Impl);
    assert_eq!(mc.exec(Call::Transfer(1)).unwrap(), Ret::Xfer(None));
}

fn imu_events(words: [u32; 6]) -> Vec<SpiEvent> {
    words
        .iter()
        .flat_map(|&w| [SpiEvent::XferDone, SpiEvent::Recv(w), SpiEvent::Null, SpiEvent::Null])
        .collect()
}

#[test]
fn imu_read_one_g() {
    let r = reg();
    let a = with_spi_env(enabled(), imu_events([0, 0, 4096, 0, 0, 0]));
    let mut mc = Machine::from_abstract(&r, a.clone(), Resolve::Impl);
    let Ret::Imu(s) = mc.exec(Call::ImuRead).unwrap() else { panic!() };
    assert_eq!((s.accel, s.gyro, s.stale), ([0, 0, 4096], [0; 3], false));

    let mut un = Machine::from_abstract(&r, a, Resolve::Impl);
    assert_eq!(unverified_imu_read(&mut un, 200_000).unwrap(), UnverifiedImu::Sample(s));

    let zeros = with_spi_env(enabled(), imu_events([0; 6]));
    let mut mc = Machine::from_abstract(&r, zeros, Resolve::Impl);
    let Ret::Imu(s) = mc.exec(Call::ImuRead).unwrap() else { panic!() };
    assert_eq!((s.accel, s.gyro), ([0; 3], [0; 3]));
}

#[test]
fn imu_read_timeout_returns_previous_sample() {
    let r = reg();
    let mut a = with_spi_env(enabled(), vec![]);
    a.imu = ImuCache { words: [1, 2, 3, 4, 5, 6], stale: false };
    let mut mc = Machine::from_abstract(&r, a, Resolve::Impl);
    let Ret::Imu(s) = mc.exec(Call::ImuRead).unwrap() else { panic!() };
    assert!(s.stale);
    assert_eq!((s.accel, s.gyro), ([1, 2, 3], [4, 5, 6]));
    assert!(mc.a.spi.enabled());
}

#[test]
fn mag_read() {
    use crate::bus_model::I2cEvent;
    let r = reg();
    let mut a = AbstractState::default();
    let bytes = [0x05u32, 0x89, 0x00, 0x10, 0xFF, 0xFE];
    let mut ev = vec![I2cEvent::Null, I2cEvent::Null, I2cEvent::Ack];
    ev.extend(bytes.iter().map(|&b| I2cEvent::Recv(b)));
    a.i2c_env = EventList::new(ev);
    for resolve in [Resolve::Spec, Resolve::Impl] {
        let mut mc = Machine::from_abstract(&r, a.clone(), resolve);
        assert_eq!(mc.exec(Call::MagRead).unwrap(), Ret::Mag([1417, -2, 16]));
        assert_eq!(mc.a.i2c.sa, i2c_layers::MAG_ADDR);
    }
}

#[test]
fn layer_violation_is_reported() {
    let r = reg();
    let mut mc = Machine::from_abstract(&r, AbstractState::default(), Resolve::Impl);
    let mut low = mc.lower(Module::Ch0Select).unwrap();
    assert_eq!(
        low.call(Call::SpiBusWrite(CH0CTRL, 1)),
        Err(ExecError::LayerViolation { caller: Module::Ch0Select, callee: Module::SpiBus })
    );
    assert!(matches!(low.store(state::SPI_BASE, 1), Err(ExecError::Memory { .. })));
}
