//! In-process publish/subscribe with per-topic FIFO delivery.
//!
//! Each subscriber owns a bounded channel. A publish holds the topic's lock
//! while it hands the message to every subscriber, so all subscribers see one
//! global order per topic, and a full channel blocks the producer.

use std::collections::HashMap;
use std::sync::mpsc::{sync_channel, Receiver, SyncSender};
use std::sync::{Arc, Mutex};

use crate::error::{invalid, PipelineError, Result};

pub const DEFAULT_CHANNEL_BOUND: usize = 64;

struct Topic<M> {
    subscribers: Vec<SyncSender<M>>,
    closed: bool,
}

pub struct Bus<M> {
    topics: Mutex<HashMap<String, Arc<Mutex<Topic<M>>>>>,
    bound: usize,
}

impl<M: Clone + Send> Bus<M> {
    pub fn new(bound: usize) -> Self {
        Self {
            topics: Mutex::new(HashMap::new()),
            bound: bound.max(1),
        }
    }

    fn topic(&self, name: &str) -> Result<Arc<Mutex<Topic<M>>>> {
        if name.is_empty() {
            return Err(invalid("topic name must be non-empty"));
        }
        let mut topics = self.topics.lock().expect("bus lock");
        Ok(topics
            .entry(name.to_owned())
            .or_insert_with(|| {
                Arc::new(Mutex::new(Topic {
                    subscribers: Vec::new(),
                    closed: false,
                }))
            })
            .clone())
    }

    /// Receives every message published to `topic` from now on.
    pub fn subscribe(&self, topic: &str) -> Result<Receiver<M>> {
        let t = self.topic(topic)?;
        let mut t = t.lock().expect("topic lock");
        if t.closed {
            return Err(PipelineError::Closed(topic.to_owned()));
        }
        let (tx, rx) = sync_channel(self.bound);
        t.subscribers.push(tx);
        Ok(rx)
    }

    /// Delivers to every live subscriber. Blocks while any subscriber's
    /// channel is full. Subscribers that hung up are dropped.
    pub fn publish(&self, topic: &str, message: M) -> Result<()> {
        let t = self.topic(topic)?;
        let mut t = t.lock().expect("topic lock");
        if t.closed {
            return Err(PipelineError::Closed(topic.to_owned()));
        }
        t.subscribers.retain(|s| s.send(message.clone()).is_ok());
        Ok(())
    }

    /// Ends the topic: subscribers drain what is queued and then see the end of stream.
    pub fn close(&self, topic: &str) -> Result<()> {
        let t = self.topic(topic)?;
        let mut t = t.lock().expect("topic lock");
        t.closed = true;
        t.subscribers.clear();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::thread;

    #[test]
    fn fifo_and_fan_out() {
        let bus = Bus::new(4);
        let a = bus.subscribe("t").unwrap();
        let b = bus.subscribe("t").unwrap();
        bus.publish("t", 1).unwrap();
        bus.publish("t", 2).unwrap();
        bus.close("t").unwrap();
        assert_eq!(a.iter().collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(b.iter().collect::<Vec<_>>(), vec![1, 2]);
        assert!(matches!(bus.publish("t", 3), Err(PipelineError::Closed(_))));
    }

    #[test]
    fn late_subscriber_sees_only_later_messages() {
        let bus = Bus::new(4);
        let early = bus.subscribe("t").unwrap();
        bus.publish("t", 'a').unwrap();
        let late = bus.subscribe("t").unwrap();
        bus.publish("t", 'b').unwrap();
        bus.close("t").unwrap();
        assert_eq!(early.iter().collect::<String>(), "ab");
        assert_eq!(late.iter().collect::<String>(), "b");
        assert!(bus.subscribe("").is_err());
    }

    #[test]
    fn backpressure_does_not_lose_messages() {
        let bus = Arc::new(Bus::new(1));
        let rx = bus.subscribe("t").unwrap();
        let producer = {
            let bus = bus.clone();
            thread::spawn(move || {
                for i in 0..1_000 {
                    bus.publish("t", i).unwrap();
                }
                bus.close("t").unwrap();
            })
        };
        let got: Vec<i32> = rx.iter().collect();
        producer.join().unwrap();
        assert_eq!(got, (0..1_000).collect::<Vec<_>>());
    }
}
