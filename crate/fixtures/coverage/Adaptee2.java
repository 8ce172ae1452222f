public class Adaptee2 {
    public void specific() { }
}
