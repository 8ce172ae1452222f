public class Adapter2 implements Target2 {
    private Adaptee2 adaptee = new Adaptee2();

    public void request() {
        adaptee.specific();
    }
}
